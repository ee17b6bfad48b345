#include "mcbd/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "mcbd/errors.hpp"

namespace mcbd {

using fourier::dft;
using fourier::idft;

void ProblemDims::validate() const {
  if (K < 1 || K > L || N < 1) {
    throw DimensionError("invalid dims L=" + std::to_string(L) + " K=" + std::to_string(K) +
                         " N=" + std::to_string(N) + " (need 1 <= K <= L, N >= 1)");
  }
}

RealSeq ProblemInstance::channels_concat() const {
  RealSeq h(dims.K * dims.N);
  for (int n = 0; n < dims.N; ++n) h.segment(n * dims.K, dims.K) = channels[n].coeffs();
  return h;
}

namespace {

ComplexSeq stack_spectra(const std::vector<RealSeq>& obs, int L) {
  ComplexSeq out(L * static_cast<Eigen::Index>(obs.size()));
  for (std::size_t n = 0; n < obs.size(); ++n) {
    out.segment(static_cast<Eigen::Index>(n) * L, L) = dft(obs[n]);
  }
  return out;
}

}  // namespace

ProblemInstance make_instance(const ProblemDims& dims, RealSeq signal,
                              std::vector<ShortFilter> channels) {
  dims.validate();
  if (signal.size() != dims.L) {
    throw DimensionError("signal length " + std::to_string(signal.size()) + " != L=" +
                         std::to_string(dims.L));
  }
  if (!signal.allFinite()) throw DimensionError("signal has non-finite entries");
  if (static_cast<int>(channels.size()) != dims.N) {
    throw DimensionError("got " + std::to_string(channels.size()) + " channels, expected N=" +
                         std::to_string(dims.N));
  }
  for (const auto& h : channels) {
    if (h.support() != dims.K || h.ambient_len() != dims.L) {
      throw DimensionError("channel shape (K=" + std::to_string(h.support()) + ", L=" +
                           std::to_string(h.ambient_len()) + ") does not match dims");
    }
  }

  ProblemInstance inst;
  inst.dims = dims;
  inst.signal = std::move(signal);
  inst.channels = std::move(channels);
  inst.observations.reserve(static_cast<std::size_t>(dims.N));
  for (const auto& h : inst.channels) {
    inst.observations.push_back(fourier::circ_conv(inst.signal, fourier::pad(h)));
  }
  inst.observations_fourier = stack_spectra(inst.observations, dims.L);
  return inst;
}

ProblemInstance with_observations(ProblemInstance inst, std::vector<RealSeq> observations) {
  if (static_cast<int>(observations.size()) != inst.dims.N) {
    throw DimensionError("observation count does not match N");
  }
  for (const auto& y : observations) {
    if (y.size() != inst.dims.L) throw DimensionError("observation length does not match L");
  }
  inst.observations = std::move(observations);
  inst.observations_fourier = stack_spectra(inst.observations, inst.dims.L);
  return inst;
}

CandidateSolution::CandidateSolution(RealSeq p, RealSeq q_concat, int K)
    : p_(std::move(p)), q_(std::move(q_concat)), K_(K) {
  if (K_ < 1 || q_.size() % K_ != 0 || q_.size() == 0) {
    throw DimensionError("concatenated filters length " + std::to_string(q_.size()) +
                         " is not a positive multiple of K=" + std::to_string(K_));
  }
  if (!p_.allFinite() || !q_.allFinite()) throw DimensionError("candidate has non-finite entries");
}

CandidateSolution CandidateSolution::from_filters(RealSeq p, const std::vector<ShortFilter>& q) {
  if (q.empty()) throw DimensionError("candidate needs at least one filter");
  const int K = q.front().support();
  RealSeq concat(K * static_cast<Eigen::Index>(q.size()));
  for (std::size_t n = 0; n < q.size(); ++n) {
    if (q[n].support() != K) throw DimensionError("filters of unequal support");
    concat.segment(static_cast<Eigen::Index>(n) * K, K) = q[n].coeffs();
  }
  return CandidateSolution(std::move(p), std::move(concat), K);
}

std::vector<ShortFilter> CandidateSolution::filters() const {
  std::vector<ShortFilter> out;
  out.reserve(static_cast<std::size_t>(N()));
  for (int n = 0; n < N(); ++n) out.emplace_back(RealSeq(channel(n)), static_cast<int>(p_.size()));
  return out;
}

GroundTruthLift GroundTruthLift::from(const ProblemInstance& inst) {
  return from(inst.signal, inst.channels_concat());
}

GroundTruthLift GroundTruthLift::from(RealSeq signal, RealSeq channels_concat) {
  GroundTruthLift t;
  t.frobenius_sq = signal.squaredNorm() * channels_concat.squaredNorm();
  t.signal = std::move(signal);
  t.channels_concat = std::move(channels_concat);
  return t;
}

LiftedOperator::LiftedOperator(const ProblemDims& dims)
    : dims_(dims), sqrt_l_(std::sqrt(static_cast<double>(dims.L))) {
  dims_.validate();
}

void LiftedOperator::check_p(const RealSeq& p) const {
  if (p.size() != dims_.L) throw DimensionError("p has length " + std::to_string(p.size()));
}

void LiftedOperator::check_q(const RealSeq& q) const {
  if (q.size() != dims_.K * dims_.N) {
    throw DimensionError("q has length " + std::to_string(q.size()) + ", expected KN");
  }
}

void LiftedOperator::check_r(const ComplexSeq& r) const {
  if (r.size() != dims_.measurements()) {
    throw DimensionError("residual has length " + std::to_string(r.size()) + ", expected LN");
  }
}

LiftedOperator::Spectra LiftedOperator::spectra(const RealSeq& p, const RealSeq& q_concat) const {
  check_p(p);
  check_q(q_concat);
  const int L = dims_.L;
  const int K = dims_.K;
  Spectra s;
  s.p_hat = dft(p);
  s.w_hat.resize(dims_.measurements());
  RealSeq w = RealSeq::Zero(L);
  for (int n = 0; n < dims_.N; ++n) {
    w.head(K) = q_concat.segment(n * K, K);
    s.w_hat.segment(n * L, L) = dft(w);
  }
  return s;
}

ComplexSeq LiftedOperator::apply(const Spectra& s) const {
  const int L = dims_.L;
  ComplexSeq out(dims_.measurements());
  for (int n = 0; n < dims_.N; ++n) {
    out.segment(n * L, L) = sqrt_l_ * s.p_hat.cwiseProduct(s.w_hat.segment(n * L, L));
  }
  return out;
}

ComplexSeq LiftedOperator::apply(const RealSeq& p, const RealSeq& q_concat) const {
  return apply(spectra(p, q_concat));
}

RealSeq LiftedOperator::adjoint_p(const ComplexSeq& r, const Spectra& s) const {
  check_r(r);
  const int L = dims_.L;
  ComplexSeq acc = ComplexSeq::Zero(L);
  for (int n = 0; n < dims_.N; ++n) {
    acc += s.w_hat.segment(n * L, L).conjugate().cwiseProduct(r.segment(n * L, L));
  }
  return (sqrt_l_ * idft(acc)).real();
}

RealSeq LiftedOperator::adjoint_p(const ComplexSeq& r, const RealSeq& q_concat) const {
  return adjoint_p(r, spectra(RealSeq::Zero(dims_.L), q_concat));
}

RealSeq LiftedOperator::adjoint_q(const ComplexSeq& r, const Spectra& s) const {
  check_r(r);
  const int L = dims_.L;
  const int K = dims_.K;
  const ComplexSeq p_conj = s.p_hat.conjugate();
  RealSeq g(K * dims_.N);
  for (int n = 0; n < dims_.N; ++n) {
    const ComplexSeq back = idft(ComplexSeq(p_conj.cwiseProduct(r.segment(n * L, L))));
    g.segment(n * K, K) = sqrt_l_ * back.head(K).real();
  }
  return g;
}

RealSeq LiftedOperator::adjoint_q(const ComplexSeq& r, const RealSeq& p) const {
  return adjoint_q(r, spectra(p, RealSeq::Zero(dims_.K * dims_.N)));
}

namespace {

ProblemDims dims_of(int L, const std::vector<ShortFilter>& q) {
  if (q.empty()) throw DimensionError("need at least one filter");
  ProblemDims d{L, q.front().support(), static_cast<int>(q.size())};
  for (const auto& h : q) {
    if (h.support() != d.K || h.ambient_len() != L) throw DimensionError("inconsistent filters");
  }
  return d;
}

RealSeq concat(const std::vector<ShortFilter>& q) {
  return CandidateSolution::from_filters(RealSeq::Zero(1), q).q();
}

}  // namespace

ComplexSeq forward(const RealSeq& p, const std::vector<ShortFilter>& q) {
  const auto dims = dims_of(static_cast<int>(p.size()), q);
  return LiftedOperator(dims).apply(p, concat(q));
}

RealSeq adjoint_p(const ComplexSeq& r, const std::vector<ShortFilter>& q) {
  if (q.empty()) throw DimensionError("need at least one filter");
  const auto dims = dims_of(q.front().ambient_len(), q);
  return LiftedOperator(dims).adjoint_p(r, concat(q));
}

std::vector<ShortFilter> adjoint_q(const ComplexSeq& r, const RealSeq& p, int K) {
  const int L = static_cast<int>(p.size());
  if (L < 1 || r.size() % L != 0) throw DimensionError("residual length not a multiple of L");
  const ProblemDims dims{L, K, static_cast<int>(r.size() / L)};
  const RealSeq g = LiftedOperator(dims).adjoint_q(r, p);
  return CandidateSolution(RealSeq::Zero(L), g, K).filters();
}

double relative_outer_error(const GroundTruthLift& truth, const CandidateSolution& cand) {
  if (truth.signal.size() != cand.p().size() || truth.channels_concat.size() != cand.q().size()) {
    throw DimensionError("candidate and ground truth have different shapes");
  }
  if (!(truth.frobenius_sq > 0.0)) throw DegenerateError("ground-truth lift has zero norm");
  const double cross = truth.signal.dot(cand.p()) * truth.channels_concat.dot(cand.q());
  const double dist_sq =
      truth.frobenius_sq - 2.0 * cross + cand.p().squaredNorm() * cand.q().squaredNorm();
  return std::sqrt(std::max(dist_sq, 0.0) / truth.frobenius_sq);
}

}  // namespace mcbd
