#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace mcbd {

using Complex = std::complex<double>;
using RealSeq = Eigen::VectorXd;
using ComplexSeq = Eigen::VectorXcd;

/// A filter supported on its first K taps inside an ambient length-L signal.
class ShortFilter {
 public:
  /// Throws DimensionError unless 1 <= K <= L and all taps are finite.
  ShortFilter(RealSeq coeffs, int ambient_len);

  const RealSeq& coeffs() const noexcept { return coeffs_; }
  int support() const noexcept { return static_cast<int>(coeffs_.size()); }
  int ambient_len() const noexcept { return ambient_len_; }

 private:
  RealSeq coeffs_;
  int ambient_len_;
};

namespace fourier {

constexpr bool is_power_of_two(std::size_t n) noexcept { return n > 0 && (n & (n - 1)) == 0; }

/// Unitary DFT (1/sqrt(L) normalization). Radix-2 FFT for power-of-two
/// lengths, direct O(L^2) sum otherwise.
ComplexSeq dft(const ComplexSeq& x);
ComplexSeq dft(const RealSeq& x);

/// Inverse of dft, also unitary.
ComplexSeq idft(const ComplexSeq& x);

/// Direct O(L^2) transforms, available for any length.
ComplexSeq dft_direct(const ComplexSeq& x);
ComplexSeq idft_direct(const ComplexSeq& x);

/// Zero-pads a short filter to its ambient length.
RealSeq pad(const ShortFilter& h);

/// Circular convolution (a * b)[l] = sum_k a[k] b[(l - k) mod L].
RealSeq circ_conv(const RealSeq& a, const RealSeq& b);

/// Circular correlation c[k] = sum_l a[l] b[(l - k) mod L]; the adjoint of x -> circ_conv(x, b).
RealSeq circ_corr(const RealSeq& a, const RealSeq& b);

}  // namespace fourier
}  // namespace mcbd
