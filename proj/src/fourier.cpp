#include "mcbd/fourier.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mcbd/errors.hpp"

namespace mcbd {

ShortFilter::ShortFilter(RealSeq coeffs, int ambient_len)
    : coeffs_(std::move(coeffs)), ambient_len_(ambient_len) {
  const auto k = static_cast<int>(coeffs_.size());
  if (k < 1 || k > ambient_len_) {
    throw DimensionError("short filter needs 1 <= K <= L, got K=" + std::to_string(k) +
                         " L=" + std::to_string(ambient_len_));
  }
  if (!coeffs_.allFinite()) throw DimensionError("short filter has non-finite taps");
}

namespace fourier {
namespace {

// Table of e^{-2 pi i k / n}, k < n/2, cached per thread.
const std::vector<Complex>& twiddles(Eigen::Index n) {
  thread_local std::unordered_map<Eigen::Index, std::vector<Complex>> cache;
  auto [it, inserted] = cache.try_emplace(n);
  if (inserted) {
    it->second.resize(static_cast<std::size_t>(n / 2));
    for (Eigen::Index k = 0; k < n / 2; ++k) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      it->second[static_cast<std::size_t>(k)] = Complex(std::cos(ang), std::sin(ang));
    }
  }
  return it->second;
}

// In-place iterative radix-2 transform; sign = -1 forward, +1 inverse. Unnormalized.
void fft_radix2(ComplexSeq& a, int sign) {
  const Eigen::Index n = a.size();
  for (Eigen::Index i = 1, j = 0; i < n; ++i) {
    Eigen::Index bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const auto& tw = twiddles(n);
  for (Eigen::Index len = 2; len <= n; len <<= 1) {
    const Eigen::Index stride = n / len;
    for (Eigen::Index i = 0; i < n; i += len) {
      for (Eigen::Index j = 0; j < len / 2; ++j) {
        Complex w = tw[static_cast<std::size_t>(j * stride)];
        if (sign > 0) w = std::conj(w);
        const Complex u = a[i + j];
        const Complex v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
      }
    }
  }
}

ComplexSeq direct(const ComplexSeq& x, int sign) {
  const Eigen::Index n = x.size();
  ComplexSeq out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Complex acc(0.0, 0.0);
    for (Eigen::Index l = 0; l < n; ++l) {
      // Reduce the index product mod n before forming the angle.
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>((k * l) % n) /
                         static_cast<double>(n);
      acc += x[l] * Complex(std::cos(ang), std::sin(ang));
    }
    out[k] = acc / std::sqrt(static_cast<double>(n));
  }
  return out;
}

ComplexSeq transform(ComplexSeq x, int sign) {
  if (x.size() < 1) throw DimensionError("transform of an empty sequence");
  const auto n = static_cast<std::size_t>(x.size());
  if (!is_power_of_two(n)) return direct(x, sign);
  fft_radix2(x, sign);
  x /= std::sqrt(static_cast<double>(n));
  return x;
}

void require_same_length(const RealSeq& a, const RealSeq& b, const char* op) {
  if (a.size() != b.size() || a.size() < 1) {
    throw DimensionError(std::string(op) + ": length mismatch (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  }
}

RealSeq real_part_checked(const ComplexSeq& z) {
  RealSeq re = z.real();
  const double residue = z.imag().norm();
  // Imaginary residue from a real-input product must be rounding noise.
  if (residue > 1e-10 * re.norm() && residue > 1e-13) {
    throw NumericalError("real-valued convolution produced imaginary residue " +
                         std::to_string(residue));
  }
  return re;
}

}  // namespace

ComplexSeq dft(const ComplexSeq& x) { return transform(x, -1); }
ComplexSeq dft(const RealSeq& x) { return transform(x.cast<Complex>(), -1); }
ComplexSeq idft(const ComplexSeq& x) { return transform(x, +1); }

ComplexSeq dft_direct(const ComplexSeq& x) { return direct(x, -1); }
ComplexSeq idft_direct(const ComplexSeq& x) { return direct(x, +1); }

RealSeq pad(const ShortFilter& h) {
  RealSeq w = RealSeq::Zero(h.ambient_len());
  w.head(h.coeffs().size()) = h.coeffs();
  return w;
}

RealSeq circ_conv(const RealSeq& a, const RealSeq& b) {
  require_same_length(a, b, "circ_conv");
  const double scale = std::sqrt(static_cast<double>(a.size()));
  const ComplexSeq prod = scale * dft(a).cwiseProduct(dft(b));
  return real_part_checked(idft(prod));
}

RealSeq circ_corr(const RealSeq& a, const RealSeq& b) {
  require_same_length(a, b, "circ_corr");
  const double scale = std::sqrt(static_cast<double>(a.size()));
  const ComplexSeq prod = scale * dft(a).cwiseProduct(dft(b).conjugate());
  return real_part_checked(idft(prod));
}

}  // namespace fourier
}  // namespace mcbd
