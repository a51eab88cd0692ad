#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace cq {

/// Banded LU factorization with partial pivoting (LAPACK gbtrf layout):
/// kl sub- and ku super-diagonals, with kl extra fill rows for pivoting.
template <typename Scalar>
class BandedLU {
  public:
    BandedLU(int n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
          ab_(static_cast<std::size_t>(ldab_) * static_cast<std::size_t>(n), Scalar(0)),
          ipiv_(static_cast<std::size_t>(n), 0) {}

    /// Assembly access; valid for -kl <= i-j <= ku before factor().
    Scalar& at(int i, int j) {
        if (i - j > kl_ || j - i > ku_) throw std::out_of_range("BandedLU::at outside band");
        return ab(i, j);
    }

    void factor() {
        for (int j = 0; j < n_; ++j) {
            const int i_hi = std::min(j + kl_, n_ - 1);
            int p = j;
            double best = std::abs(ab(j, j));
            for (int i = j + 1; i <= i_hi; ++i) {
                const double v = std::abs(ab(i, j));
                if (v > best) {
                    best = v;
                    p = i;
                }
            }
            if (best == 0.0) throw std::runtime_error("BandedLU: singular matrix");
            ipiv_[static_cast<std::size_t>(j)] = p;
            const int c_hi = std::min(j + kl_ + ku_, n_ - 1);
            if (p != j)
                for (int c = j; c <= c_hi; ++c) std::swap(ab(j, c), ab(p, c));
            for (int i = j + 1; i <= i_hi; ++i) {
                const Scalar l = ab(i, j) / ab(j, j);
                ab(i, j) = l;
                for (int c = j + 1; c <= c_hi; ++c) ab(i, c) -= l * ab(j, c);
            }
        }
        factored_ = true;
    }

    void solve(std::span<Scalar> rhs) const {
        if (!factored_) throw std::logic_error("BandedLU::solve before factor");
        if (static_cast<int>(rhs.size()) != n_) throw std::invalid_argument("BandedLU: rhs size");
        for (int j = 0; j < n_; ++j) {
            const int p = ipiv_[static_cast<std::size_t>(j)];
            if (p != j) std::swap(rhs[static_cast<std::size_t>(j)], rhs[static_cast<std::size_t>(p)]);
            const int i_hi = std::min(j + kl_, n_ - 1);
            for (int i = j + 1; i <= i_hi; ++i)
                rhs[static_cast<std::size_t>(i)] -= cab(i, j) * rhs[static_cast<std::size_t>(j)];
        }
        for (int i = n_ - 1; i >= 0; --i) {
            const int c_hi = std::min(i + kl_ + ku_, n_ - 1);
            Scalar acc = rhs[static_cast<std::size_t>(i)];
            for (int c = i + 1; c <= c_hi; ++c) acc -= cab(i, c) * rhs[static_cast<std::size_t>(c)];
            rhs[static_cast<std::size_t>(i)] = acc / cab(i, i);
        }
    }

    int size() const { return n_; }

  private:
    Scalar& ab(int i, int j) {
        return ab_[static_cast<std::size_t>(j) * static_cast<std::size_t>(ldab_) +
                   static_cast<std::size_t>(kl_ + ku_ + i - j)];
    }
    const Scalar& cab(int i, int j) const {
        return ab_[static_cast<std::size_t>(j) * static_cast<std::size_t>(ldab_) +
                   static_cast<std::size_t>(kl_ + ku_ + i - j)];
    }

    int n_, kl_, ku_, ldab_;
    std::vector<Scalar> ab_;
    std::vector<int> ipiv_;
    bool factored_ = false;
};

}  // namespace cq
