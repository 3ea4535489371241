#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace survht {

/// Kahan-Babuska compensated accumulator (Neumaier variant).
class KahanSum {
  public:
    KahanSum() = default;
    explicit KahanSum(double init) : sum_(init) {}

    KahanSum& add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
        return *this;
    }

    KahanSum& operator+=(double x) { return add(x); }

    [[nodiscard]] double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double kahan_total(std::span<const double> xs) {
    KahanSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

} // namespace survht
