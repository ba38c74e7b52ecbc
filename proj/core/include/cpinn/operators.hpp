#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpinn/jet.hpp"

namespace cpinn {

/// One differential operator candidate; each maps to exactly one Jet2 component.
enum class OperatorId { Ut, Ux, Uxx, Uxt, Utt };

/// "u_t", "u_x", "u_xx", "u_xt", "u_tt".
std::string_view operator_name(OperatorId id);
OperatorId parse_operator(std::string_view name);
JetComponent jet_component(OperatorId id);

using Library = std::vector<OperatorId>;

Library parse_library(std::span<const std::string> names);
Library heat_library();
Library wave_library();

/// A non-empty subset of a fixed, ordered library together with its coefficients.
///
/// Bit i of `mask` activates `library[i]`; the mask value is the combination index m.
/// `lambda` is dense over the active operators only.
struct Combination {
    Library library;
    std::uint32_t mask = 0;
    std::vector<double> lambda;

    std::uint32_t index() const { return mask; }
    int term_count() const;
    std::vector<OperatorId> active() const;
    /// Active operator names joined with '+', e.g. "u_t+u_xx".
    std::string label() const;

    /// Throws ConfigError when lambda does not match the mask.
    void validate() const;
};

inline constexpr std::size_t kMaxLibrarySize = 16;

/// All 2^p - 1 non-empty combinations in ascending mask order, lambda zeroed.
std::vector<Combination> enumerate(const Library& library);

/// Builds a single combination from a library and a set of active operators.
Combination make_combination(const Library& library, std::span<const OperatorId> active,
                             std::vector<double> lambda);

/// Values of the active operators at a jet, in library order.
std::vector<double> phi(const Combination& comb, const Jet2& jet);

double phi_dot_lambda(const Combination& comb, const Jet2& jet);

/// phi(u)^T lambda - g_hat.
double residual(const Combination& comb, const Jet2& jet_u, double g_hat);

} // namespace cpinn
