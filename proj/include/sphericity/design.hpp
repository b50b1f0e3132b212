#pragma once

#include <string>

#include "sphericity/errors.hpp"

namespace sphericity {

/// Shape of a two-step monotone sample: N1 complete p-vectors plus N2
/// observations of the leading p1 coordinates only.
///
/// The complete-data case is p2 = 0, N2 = 0 (so tau1 = 1). Construction
/// enforces n >= n1 > p >= p1 >= 1, which is what every null-distribution
/// formula in this library assumes.
class MonotoneDesign {
public:
    MonotoneDesign(int N1, int N2, int p1, int p2) : N1_(N1), N2_(N2), p1_(p1), p2_(p2) { validate(); }

    /// Build from n = N - 1 and n1 = N1 - 1.
    static MonotoneDesign from_n(int n, int n1, int p1, int p2) { return {n1 + 1, n - n1, p1, p2}; }

    static MonotoneDesign complete(int N, int p) { return {N, 0, p, 0}; }

    int N1() const noexcept { return N1_; }
    int N2() const noexcept { return N2_; }
    int N() const noexcept { return N1_ + N2_; }
    int p1() const noexcept { return p1_; }
    int p2() const noexcept { return p2_; }
    int p() const noexcept { return p1_ + p2_; }
    int n() const noexcept { return N() - 1; }
    int n1() const noexcept { return N1_ - 1; }
    double tau1() const noexcept { return static_cast<double>(N1_) / static_cast<double>(N()); }
    bool is_complete() const noexcept { return p2_ == 0; }

    /// Degrees of freedom f = (p+2)(p-1)/2 of the limiting chi-square.
    int chi2_dof() const noexcept { return (p() + 2) * (p() - 1) / 2; }

    /// p1 + tau1 p2
    double effective_dim() const noexcept { return p1_ + tau1() * p2_; }

    /// Np1 + N1p2
    double total_weight() const noexcept {
        return static_cast<double>(N()) * p1_ + static_cast<double>(N1_) * p2_;
    }

    std::string to_string() const {
        return "N1=" + std::to_string(N1_) + " N2=" + std::to_string(N2_) + " p1=" + std::to_string(p1_) +
               " p2=" + std::to_string(p2_);
    }

    friend bool operator==(const MonotoneDesign&, const MonotoneDesign&) = default;

private:
    void validate() const {
        if (p1_ < 1) throw InvalidDesign("p1 must be at least 1 (" + to_string() + ")");
        if (p2_ < 0) throw InvalidDesign("p2 must be non-negative (" + to_string() + ")");
        if (N2_ < 0) throw InvalidDesign("N2 must be non-negative (" + to_string() + ")");
        if (p2_ == 0 && N2_ != 0)
            throw InvalidDesign("complete data (p2 = 0) requires N2 = 0 (" + to_string() + ")");
        if (!(N1_ - 1 > p1_ + p2_))
            throw InvalidDesign("need n1 = N1 - 1 > p (" + to_string() + ")");
    }

    int N1_;
    int N2_;
    int p1_;
    int p2_;
};

}  // namespace sphericity
