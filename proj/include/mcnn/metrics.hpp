#pragma once

#include "mcnn/error.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mcnn {

/// counts[t][p]: rows are truth, columns are prediction.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
        detail::require(classes >= 1, "ConfusionMatrix: need at least one class");
    }

    [[nodiscard]] std::size_t class_count() const noexcept { return classes_; }
    std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts_[truth * classes_ + pred]; }
    [[nodiscard]] std::uint64_t at(std::size_t truth, std::size_t pred) const {
        return counts_[truth * classes_ + pred];
    }

    [[nodiscard]] std::uint64_t total() const {
        std::uint64_t n = 0;
        for (auto c : counts_) n += c;
        return n;
    }
    [[nodiscard]] std::uint64_t row_sum(std::size_t t) const {
        std::uint64_t n = 0;
        for (std::size_t p = 0; p < classes_; ++p) n += at(t, p);
        return n;
    }
    [[nodiscard]] std::uint64_t col_sum(std::size_t p) const {
        std::uint64_t n = 0;
        for (std::size_t t = 0; t < classes_; ++t) n += at(t, p);
        return n;
    }

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t classes_;
    std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> pred,
                                 std::size_t classes) {
    if (truth.size() != pred.size())
        throw ArgumentError("confusion: " + std::to_string(truth.size()) + " truth labels vs " +
                            std::to_string(pred.size()) + " predictions");
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= classes || pred[i] >= classes)
            throw ArgumentError("confusion: label out of range at position " + std::to_string(i));
        ++cm.at(truth[i], pred[i]);
    }
    return cm;
}

inline void require_nonempty(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw ArgumentError("metrics: empty confusion matrix");
}

inline double overall_accuracy(const ConfusionMatrix& cm) {
    require_nonempty(cm);
    std::uint64_t diag = 0;
    for (std::size_t k = 0; k < cm.class_count(); ++k) diag += cm.at(k, k);
    return static_cast<double>(diag) / static_cast<double>(cm.total());
}

/// Recall per class; negative for classes with no truth samples.
inline std::vector<double> per_class_accuracy(const ConfusionMatrix& cm) {
    std::vector<double> acc(cm.class_count(), -1.0);
    for (std::size_t k = 0; k < cm.class_count(); ++k) {
        const auto n = cm.row_sum(k);
        if (n > 0) acc[k] = static_cast<double>(cm.at(k, k)) / static_cast<double>(n);
    }
    return acc;
}

/// Mean recall over the classes that have truth samples.
inline double average_accuracy(const ConfusionMatrix& cm) {
    require_nonempty(cm);
    double sum = 0.0;
    std::size_t n = 0;
    for (double a : per_class_accuracy(cm))
        if (a >= 0.0) {
            sum += a;
            ++n;
        }
    return sum / static_cast<double>(n);
}

/// Chance agreement from the marginal products.
inline double expected_agreement(const ConfusionMatrix& cm) {
    require_nonempty(cm);
    const auto total = static_cast<double>(cm.total());
    double pe = 0.0;
    for (std::size_t k = 0; k < cm.class_count(); ++k)
        pe += static_cast<double>(cm.row_sum(k)) * static_cast<double>(cm.col_sum(k));
    return pe / (total * total);
}

/// Cohen's kappa. When chance agreement is 1 (a single class in both truth
/// and prediction) the ratio is undefined; that case is perfect agreement
/// and returns 1.
inline double kappa(const ConfusionMatrix& cm) {
    const double po = overall_accuracy(cm);
    const double pe = expected_agreement(cm);
    if (pe >= 1.0) return 1.0;
    return (po - pe) / (1.0 - pe);
}

}  // namespace mcnn
