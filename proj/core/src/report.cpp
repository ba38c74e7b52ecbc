#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cpinn/error.hpp"
#include "cpinn/selection.hpp"

namespace cpinn {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

std::string snapshot_key(double t) {
    std::string s = format_exact(t);
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

std::string lambda_list(const Combination& c) {
    std::string s;
    for (std::size_t i = 0; i < c.lambda.size(); ++i) {
        if (i) s += ';';
        s += format_number(c.lambda[i]);
    }
    return s;
}

std::string status_of(const CandidateResult& r) {
    if (r.aborted) return "aborted";
    return r.converged ? "converged" : "max_outer";
}

std::string xml_escape(const std::string& in) {
    std::string out;
    for (char ch : in) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += ch;
        }
    }
    return out;
}

} // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9e", v);
    return buf;
}

void write_candidates_csv(const std::filesystem::path& path, const DiscoveryReport& report) {
    auto out = open_out(path);
    const auto& snaps = report.winner.snapshots;
    out << "rank,mask,operators,p,n,sigma2_hat,aic,rmse_train,cc_train,rmse_test,cc_test,rmse_test_pre_rp,"
           "rmse_grid,cc_grid";
    for (const auto& s : snaps) out << ",rmse_t" << snapshot_key(s.t) << ",cc_t" << snapshot_key(s.t);
    out << ",residual_rmse,lambda_norm,lambda,outer_iterations,status\n";

    auto row = [&](const CandidateResult& r, const std::string& rank) {
        out << rank << ',' << r.combination.mask << ',' << r.combination.label() << ',' << r.p() << ',' << r.n << ','
            << format_number(r.sigma2_hat) << ',' << format_number(r.aic) << ',' << format_number(r.train.rmse) << ','
            << format_number(r.train.cc) << ',' << format_number(r.test.rmse) << ',' << format_number(r.test.cc) << ','
            << format_number(r.test_before_rp.rmse) << ',' << format_number(r.grid.rmse) << ','
            << format_number(r.grid.cc);
        for (std::size_t i = 0; i < snaps.size(); ++i) {
            const Metrics m = i < r.snapshots.size() ? r.snapshots[i].metrics : Metrics{NAN, NAN};
            out << ',' << format_number(m.rmse) << ',' << format_number(m.cc);
        }
        out << ',' << format_number(r.residual_rmse) << ',' << format_number(r.lambda_norm()) << ','
            << lambda_list(r.combination) << ',' << r.outer_iterations << ',' << status_of(r) << '\n';
    };
    for (std::size_t i = 0; i < report.ranked.size(); ++i) row(report.ranked[i], std::to_string(i + 1));
    for (const auto& r : report.aborted) row(r, "-");
}

void write_summary_markdown(const std::filesystem::path& path, const DiscoveryReport& report,
                            const ReportContext& context) {
    auto out = open_out(path);
    const auto& w = report.winner;
    out << "# " << context.title << "\n\n";
    if (!context.data_description.empty()) out << "Data: " << context.data_description << "\n\n";
    if (!context.library.empty()) out << "Operator library: " << context.library << "\n\n";
    out << "## Selected structure\n\n";
    out << "Winner: `" << w.combination.label() << "` (mask " << w.combination.mask << ", p = " << w.p() << ")\n\n";
    out << "| quantity | value |\n|---|---|\n";
    out << "| AIC | " << format_number(w.aic) << " |\n";
    out << "| sigma2_hat | " << format_number(w.sigma2_hat) << " |\n";
    const auto active = w.combination.active();
    for (std::size_t i = 0; i < active.size(); ++i) {
        out << "| lambda[" << operator_name(active[i]) << "] | " << format_number(w.combination.lambda[i]) << " |\n";
    }
    out << "| residual RMSE | " << format_number(w.residual_rmse) << " |\n\n";

    out << "## Prediction accuracy of the winner\n\n| set | RMSE | CC |\n|---|---|---|\n";
    out << "| training | " << format_number(w.train.rmse) << " | " << format_number(w.train.cc) << " |\n";
    out << "| testing | " << format_number(w.test.rmse) << " | " << format_number(w.test.cc) << " |\n";
    if (!std::isnan(w.grid.rmse)) {
        out << "| full grid | " << format_number(w.grid.rmse) << " | " << format_number(w.grid.cc) << " |\n";
    }
    for (const auto& s : w.snapshots) {
        out << "| t = " << format_exact(s.t) << " | " << format_number(s.metrics.rmse) << " | "
            << format_number(s.metrics.cc) << " |\n";
    }

    out << "\n## Best AIC per term count\n\n";
    out << "Each bar of `aic.svg` is the best (minimal) AIC among combinations with that many terms.\n\n";
    out << "| terms | combination | AIC |\n|---|---|---|\n";
    for (const auto& [terms, idx] : report.best_by_terms) {
        const auto& r = report.ranked[idx];
        out << "| " << terms << " | `" << r.combination.label() << "` | " << format_number(r.aic) << " |\n";
    }

    out << "\n## All candidates\n\n| rank | combination | p | sigma2_hat | AIC |\n|---|---|---|---|---|\n";
    for (std::size_t i = 0; i < report.ranked.size(); ++i) {
        const auto& r = report.ranked[i];
        out << "| " << i + 1 << " | `" << r.combination.label() << "` | " << r.p() << " | "
            << format_number(r.sigma2_hat) << " | " << format_number(r.aic) << " |\n";
    }
    if (!report.aborted.empty()) {
        out << "\n## Aborted candidates\n\n";
        for (const auto& r : report.aborted) out << "- `" << r.combination.label() << "`: " << r.diagnostic << "\n";
    }
}

void write_aic_svg(const std::filesystem::path& path, const DiscoveryReport& report) {
    struct Bar {
        int terms;
        double aic;
        std::string label;
    };
    std::vector<Bar> bars;
    for (const auto& [terms, idx] : report.best_by_terms) {
        bars.push_back({terms, report.ranked[idx].aic, report.ranked[idx].combination.label()});
    }

    const double width = 120.0 * static_cast<double>(bars.size()) + 120.0;
    const double height = 360.0;
    const double top = 40.0, bottom = 300.0;
    double lo = 0.0, hi = 0.0;
    for (const auto& b : bars) {
        lo = std::min(lo, b.aic);
        hi = std::max(hi, b.aic);
    }
    if (hi - lo <= 0.0) hi = lo + 1.0;
    auto ypos = [&](double v) { return top + (hi - v) / (hi - lo) * (bottom - top); };
    const double y0 = ypos(0.0);

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << "Best AIC per number of operator terms</text>\n";
    s << "<line x1=\"60\" y1=\"" << y0 << "\" x2=\"" << width - 20 << "\" y2=\"" << y0
      << "\" stroke=\"black\"/>\n";
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const auto& b = bars[i];
        const double x = 80.0 + 120.0 * static_cast<double>(i);
        const double y = ypos(b.aic);
        const double ytop = std::min(y, y0);
        const double h = std::abs(y - y0);
        const bool is_winner = b.label == report.winner.combination.label();
        s << "<rect x=\"" << x << "\" y=\"" << ytop << "\" width=\"80\" height=\"" << h << "\" fill=\""
          << (is_winner ? "#c0392b" : "#2e86c1") << "\"/>\n";
        s << "<text x=\"" << x + 40 << "\" y=\"" << (b.aic < 0 ? ytop + h + 14 : ytop - 4)
          << "\" text-anchor=\"middle\">" << format_number(b.aic) << "</text>\n";
        s << "<text x=\"" << x + 40 << "\" y=\"" << bottom + 30 << "\" text-anchor=\"middle\">" << b.terms
          << (b.terms == 1 ? " term" : " terms") << "</text>\n";
        s << "<text x=\"" << x + 40 << "\" y=\"" << bottom + 46 << "\" text-anchor=\"middle\" font-size=\"10\">"
          << xml_escape(b.label) << "</text>\n";
    }
    s << "<text x=\"" << width / 2 << "\" y=\"" << height - 6
      << "\" text-anchor=\"middle\" font-size=\"10\">bar = minimal AIC among combinations of that size; "
         "red = selected</text>\n";
    s << "</svg>\n";
    auto out = open_out(path);
    out << s.str();
}

} // namespace cpinn
