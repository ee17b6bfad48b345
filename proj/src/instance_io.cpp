#include "mcbd/instance_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mcbd/errors.hpp"
#include "mcbd/experiments.hpp"

namespace mcbd {
namespace {

struct LineReader {
  std::istream& in;
  std::size_t line_no = 0;

  // Next non-blank line; false at end of input.
  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  }
};

std::vector<double> parse_values(const std::string& line, std::size_t line_no, int expected,
                                 const char* what) {
  std::istringstream ss(line);
  std::vector<double> values;
  std::string tok;
  while (ss >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw ParseError(line_no, fmt::format("bad number '{}' in {}", tok, what));
    if (!std::isfinite(v)) throw ParseError(line_no, fmt::format("non-finite value in {}", what));
    values.push_back(v);
  }
  if (static_cast<int>(values.size()) != expected) {
    throw ParseError(line_no, fmt::format("{} needs {} values, got {}", what, expected, values.size()));
  }
  return values;
}

int parse_dim(const std::string& tok, std::size_t line_no) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size() || v < 1 || v > 1'000'000) {
    throw ParseError(line_no, fmt::format("bad dimension '{}'", tok));
  }
  return static_cast<int>(v);
}

}  // namespace

ProblemInstance read_instance(std::istream& in) {
  LineReader reader{in};
  std::string line;
  if (!reader.next(line)) throw ParseError(reader.line_no + 1, "empty instance file");

  ProblemDims dims;
  {
    std::istringstream ss(line);
    std::vector<std::string> toks;
    for (std::string t; ss >> t;) toks.push_back(t);
    if (toks.size() != 3) throw ParseError(reader.line_no, "header must be 'L K N'");
    dims = {parse_dim(toks[0], reader.line_no), parse_dim(toks[1], reader.line_no),
            parse_dim(toks[2], reader.line_no)};
    if (dims.K > dims.L) throw ParseError(reader.line_no, "K must not exceed L");
  }

  if (!reader.next(line)) throw ParseError(reader.line_no + 1, "missing signal line");
  const auto s = parse_values(line, reader.line_no, dims.L, "signal");
  RealSeq signal = Eigen::Map<const RealSeq>(s.data(), dims.L);

  std::vector<ShortFilter> channels;
  for (int n = 0; n < dims.N; ++n) {
    if (!reader.next(line)) {
      throw ParseError(reader.line_no + 1, fmt::format("missing channel line {}", n));
    }
    const auto h = parse_values(line, reader.line_no, dims.K, "channel");
    channels.emplace_back(Eigen::Map<const RealSeq>(h.data(), dims.K), dims.L);
  }

  std::optional<NoiseDirective> noise;
  if (reader.next(line)) {
    std::istringstream ss(line);
    std::string kw, snr_tok, seed_tok, extra;
    ss >> kw >> snr_tok >> seed_tok;
    if (kw != "NOISE" || seed_tok.empty() || (ss >> extra)) {
      throw ParseError(reader.line_no, "expected 'NOISE <snr_db> <seed>'");
    }
    NoiseDirective nd;
    try {
      std::size_t used = 0;
      nd.snr_db = std::stod(snr_tok, &used);
      if (used != snr_tok.size()) throw ParseError(reader.line_no, "bad snr_db");
      nd.seed = std::stoull(seed_tok, &used);
      if (used != seed_tok.size()) throw ParseError(reader.line_no, "bad seed");
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError(reader.line_no, "bad NOISE values");
    }
    noise = nd;
    if (reader.next(line)) throw ParseError(reader.line_no, "trailing content after NOISE block");
  }

  ProblemInstance inst = make_instance(dims, std::move(signal), std::move(channels));
  if (noise) {
    Rng rng(noise->seed);
    inst = experiments::add_noise(inst, noise->snr_db, rng);
  }
  return inst;
}

ProblemInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  return read_instance(in);
}

void write_instance(std::ostream& out, const ProblemInstance& inst,
                    const std::optional<NoiseDirective>& noise) {
  auto write_row = [&out](const RealSeq& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << fmt::format("{:.17g}", v[i]);
    out << '\n';
  };
  out << inst.dims.L << ' ' << inst.dims.K << ' ' << inst.dims.N << '\n';
  write_row(inst.signal);
  for (const auto& h : inst.channels) write_row(h.coeffs());
  if (noise) out << fmt::format("NOISE {:.17g} {}\n", noise->snr_db, noise->seed);
}

void save_instance(const std::filesystem::path& path, const ProblemInstance& inst,
                   const std::optional<NoiseDirective>& noise) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_instance(out, inst, noise);
}

}  // namespace mcbd
