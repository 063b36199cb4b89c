#ifndef DEUCE_METRICS_HPP
#define DEUCE_METRICS_HPP

#include "deuce/common.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <string>

namespace deuce {

struct SelectionReport {
    double imb = kInf;
    double diversity = 0.0;
    std::vector<std::size_t> class_counts;
    std::size_t b = 0;
};

inline std::vector<std::size_t> class_counts(std::span<const Index> labels, std::size_t n_classes) {
    std::vector<std::size_t> counts(n_classes, 0);
    for (Index l : labels) {
        if (l >= n_classes) throw Error("class index " + std::to_string(l) + " out of range");
        ++counts[l];
    }
    return counts;
}

/// max_j n_j / min_j n_j over all classes; +inf when some class is absent.
inline double imbalance_from_counts(std::span<const std::size_t> counts) {
    if (counts.empty()) throw Error("imbalance needs at least one class");
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    if (*lo == 0) return kInf;
    return static_cast<double>(*hi) / static_cast<double>(*lo);
}

inline double imbalance(std::span<const Index> labels, std::size_t n_classes) {
    const auto counts = class_counts(labels, n_classes);
    return imbalance_from_counts(counts);
}

/// Inverse mean Euclidean distance from each unselected row to its nearest
/// selected row. +inf when that mean is zero.
template <typename T>
double diversity(const Matrix<T>& reference, std::span<const Index> selected, unsigned threads = 0) {
    const std::size_t n = reference.rows();
    if (selected.empty()) throw Error("diversity needs a non-empty selection");
    std::vector<char> in_sel(n, 0);
    for (Index s : selected) {
        if (s >= n) throw Error("selected index out of range");
        in_sel[s] = 1;
    }
    std::size_t n_unselected = 0;
    for (char c : in_sel) n_unselected += c ? 0 : 1;
    if (n_unselected == 0) throw Error("diversity is undefined when every document is selected");
    std::vector<double> nearest(n, 0.0);
    parallel_for(
        n,
        [&](std::size_t i) {
            if (in_sel[i]) return;
            double best = kInf;
            auto ri = reference.row(i);
            for (Index s : selected) {
                auto rs = reference.row(s);
                double acc = 0.0;
                for (std::size_t c = 0; c < ri.size(); ++c) {
                    const double d = static_cast<double>(ri[c]) - static_cast<double>(rs[c]);
                    acc += d * d;
                }
                best = std::min(best, std::sqrt(acc));
            }
            nearest[i] = best;
        },
        threads);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += nearest[i];
    const double mean = total / static_cast<double>(n_unselected);
    return mean == 0.0 ? kInf : 1.0 / mean;
}

inline std::string format_metric(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

inline void print_report(const SelectionReport& r, std::span<const std::string> class_names, std::ostream& out) {
    out << "b          " << r.b << '\n';
    out << "IMB        " << format_metric(r.imb) << '\n';
    out << "diversity  " << format_metric(r.diversity) << '\n';
    out << "class counts:\n";
    for (std::size_t j = 0; j < r.class_counts.size(); ++j) {
        out << "  " << (j < class_names.size() ? class_names[j] : std::to_string(j)) << "  " << r.class_counts[j]
            << '\n';
    }
}

} // namespace deuce

#endif // DEUCE_METRICS_HPP
