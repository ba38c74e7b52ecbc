#include "cpinn/operators.hpp"

#include <algorithm>
#include <bit>

#include "cpinn/error.hpp"

namespace cpinn {

std::string_view operator_name(OperatorId id) {
    switch (id) {
    case OperatorId::Ut: return "u_t";
    case OperatorId::Ux: return "u_x";
    case OperatorId::Uxx: return "u_xx";
    case OperatorId::Uxt: return "u_xt";
    case OperatorId::Utt: return "u_tt";
    }
    return "?";
}

OperatorId parse_operator(std::string_view name) {
    for (auto id : {OperatorId::Ut, OperatorId::Ux, OperatorId::Uxx, OperatorId::Uxt, OperatorId::Utt}) {
        if (operator_name(id) == name) return id;
    }
    throw ConfigError("unknown differential operator '" + std::string(name) + "'");
}

JetComponent jet_component(OperatorId id) {
    switch (id) {
    case OperatorId::Ut: return JetComponent::Dt;
    case OperatorId::Ux: return JetComponent::Dx;
    case OperatorId::Uxx: return JetComponent::Dxx;
    case OperatorId::Uxt: return JetComponent::Dxt;
    case OperatorId::Utt: return JetComponent::Dtt;
    }
    return JetComponent::Value;
}

Library parse_library(std::span<const std::string> names) {
    Library lib;
    for (const auto& n : names) {
        const OperatorId id = parse_operator(n);
        if (std::find(lib.begin(), lib.end(), id) != lib.end()) {
            throw ConfigError("operator '" + n + "' listed twice in library");
        }
        lib.push_back(id);
    }
    return lib;
}

Library heat_library() { return {OperatorId::Ut, OperatorId::Ux, OperatorId::Uxx, OperatorId::Uxt}; }

Library wave_library() {
    return {OperatorId::Ut, OperatorId::Ux, OperatorId::Uxx, OperatorId::Uxt, OperatorId::Utt};
}

int Combination::term_count() const { return std::popcount(mask); }

std::vector<OperatorId> Combination::active() const {
    std::vector<OperatorId> ops;
    for (std::size_t i = 0; i < library.size(); ++i) {
        if (mask >> i & 1U) ops.push_back(library[i]);
    }
    return ops;
}

std::string Combination::label() const {
    std::string s;
    for (auto id : active()) {
        if (!s.empty()) s += '+';
        s += operator_name(id);
    }
    return s;
}

void Combination::validate() const {
    if (library.empty() || library.size() > kMaxLibrarySize) {
        throw ConfigError("library size must be in [1, 16]");
    }
    if (mask == 0 || (mask >> library.size()) != 0) {
        throw ConfigError("combination mask out of range for library");
    }
    if (static_cast<int>(lambda.size()) != term_count()) {
        throw ConfigError("lambda has " + std::to_string(lambda.size()) + " entries for " +
                          std::to_string(term_count()) + " active operators");
    }
}

std::vector<Combination> enumerate(const Library& library) {
    if (library.empty()) throw ConfigError("operator library is empty");
    if (library.size() > kMaxLibrarySize) throw ConfigError("operator library larger than 16");
    const std::uint32_t count = 1U << library.size();
    std::vector<Combination> out;
    out.reserve(count - 1);
    for (std::uint32_t m = 1; m < count; ++m) {
        Combination c{library, m, {}};
        c.lambda.assign(static_cast<std::size_t>(std::popcount(m)), 0.0);
        out.push_back(std::move(c));
    }
    return out;
}

Combination make_combination(const Library& library, std::span<const OperatorId> active,
                             std::vector<double> lambda) {
    Combination c{library, 0, std::move(lambda)};
    for (auto id : active) {
        auto it = std::find(library.begin(), library.end(), id);
        if (it == library.end()) {
            throw ConfigError("operator " + std::string(operator_name(id)) + " is not in the library");
        }
        c.mask |= 1U << static_cast<unsigned>(it - library.begin());
    }
    c.validate();
    return c;
}

std::vector<double> phi(const Combination& comb, const Jet2& jet) {
    std::vector<double> v;
    v.reserve(comb.lambda.size());
    for (auto id : comb.active()) v.push_back(jet[jet_component(id)]);
    return v;
}

double phi_dot_lambda(const Combination& comb, const Jet2& jet) {
    double s = 0.0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < comb.library.size(); ++i) {
        if (comb.mask >> i & 1U) s += comb.lambda[j++] * jet[jet_component(comb.library[i])];
    }
    return s;
}

double residual(const Combination& comb, const Jet2& jet_u, double g_hat) {
    return phi_dot_lambda(comb, jet_u) - g_hat;
}

} // namespace cpinn
