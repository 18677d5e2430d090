#pragma once

// Run configuration: JSON schema (validated on load), deterministic
// serialization, and the kernel/matrix builders shared by the CLI
// subcommands.  A config round-trips through parse/dump bit-identically
// once normalized by the serializer.

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>

#include "aniso/measures.hpp"

namespace aniso {

using Json = nlohmann::json;

struct OmegaSpec {
  // "trig": coefficients against cos(k phi), sin(k phi) of the preimage
  // angle (n = 2); "poly": sum of coeff * prod theta_i^{p_i} monomials.
  std::string type = "trig";
  std::vector<double> cos_coeff, sin_coeff;            // trig
  std::vector<std::pair<double, std::vector<int>>> monomials;  // poly
};

struct KernelSpec {
  double beta = 2.0;
  OmegaSpec omega;
  std::string h_type = "one";  // one | constant | dyadic_steps
  double h_value = 1.0;
  int h_j0 = 0;
  std::vector<double> h_steps;
  std::vector<double> curve;  // power exponents; empty = zero curve
};

struct SweepSpec {
  std::string mode = "theorem5";  // theorem5 | corollary | lemma2
  std::vector<double> eta, zeta;
  double lambda_min = 1.0, lambda_max = 1e4;
  int points = 25;
  double interval_lo = 1.0, interval_hi = 2.0;
  std::string weight = "dt";  // dt | dt_over_t
  double tol = 1e-10;
};

struct MeasuresSpec {
  std::vector<std::string> modes{"eq2_2", "eq2_3", "eq2_4", "eq2_5",
                                 "lemma1"};
  int k = 0;
  std::vector<double> xi_direction{0.8, 0.6};
  std::vector<double> eta_freq;
  double x_min = 1e-3, x_max = 1e3;
  double lemma1_x_max = 100.0;  // desk range for the square integral
  int points = 25;
  double q = 2.0, s = 2.0;
  int resolution = 256;
};

struct ExtrapolateSpec {
  double a = 3.0;
  int m_max = 50;
  int block_lo = -4, block_hi = 4;
  int resolution = 128;
};

struct RunConfig {
  std::uint64_t seed = 12345;
  std::string out_dir = "out";
  double tol = 1e-8;            // generic check tolerance (oracle-level)
  double spectral_tol = 1e-6;   // eigenvalue clustering tolerance
  double residual_tol = 1e-7;   // projection-identity residuals
  double group_tol = 1e-8;      // group law / determinant checks
  int resolution = 128;
  double q_dual = 2.0;
  int samples = 10000;
  std::optional<Matrix> matrix;
  std::optional<KernelSpec> kernel;
  SweepSpec sweep;
  MeasuresSpec measures;
  ExtrapolateSpec extrapolate;
  std::string beta_source = "config";  // config | from_q | from_qs
};

namespace cfgdetail {

inline const Json& need(const Json& j, const char* key, const char* where) {
  auto it = j.find(key);
  if (it == j.end())
    throw SchemaError(std::string("config: missing \"") + key + "\" in " +
                      where);
  return *it;
}

inline double num(const Json& j, const char* where) {
  if (!j.is_number())
    throw SchemaError(std::string("config: ") + where + " must be a number");
  return j.get<double>();
}

inline std::vector<double> num_array(const Json& j, const char* where) {
  if (!j.is_array())
    throw SchemaError(std::string("config: ") + where + " must be an array");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(num(v, where));
  return out;
}

}  // namespace cfgdetail

inline Matrix parse_matrix(const Json& j) {
  if (!j.is_array() || j.empty())
    throw SchemaError("config: matrix must be a non-empty array of rows");
  const int n = static_cast<int>(j.size());
  Matrix m(n, n);
  for (int r = 0; r < n; ++r) {
    auto row = cfgdetail::num_array(j[r], "matrix row");
    if (static_cast<int>(row.size()) != n)
      throw SchemaError("config: matrix must be square");
    for (int c = 0; c < n; ++c) m(r, c) = row[c];
  }
  return m;
}

inline RunConfig parse_config(const Json& j) {
  RunConfig cfg;
  if (!j.is_object()) throw SchemaError("config: top level must be an object");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      throw SchemaError("config: seed must be an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("resolution"))
    cfg.resolution = static_cast<int>(cfgdetail::num(j["resolution"],
                                                     "resolution"));
  if (j.contains("q_dual")) cfg.q_dual = cfgdetail::num(j["q_dual"], "q_dual");
  if (j.contains("samples"))
    cfg.samples = static_cast<int>(cfgdetail::num(j["samples"], "samples"));
  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    if (!t.is_object()) throw SchemaError("config: tolerances must be object");
    if (t.contains("tol")) cfg.tol = cfgdetail::num(t["tol"], "tol");
    if (t.contains("spectral"))
      cfg.spectral_tol = cfgdetail::num(t["spectral"], "spectral");
    if (t.contains("residual"))
      cfg.residual_tol = cfgdetail::num(t["residual"], "residual");
    if (t.contains("group"))
      cfg.group_tol = cfgdetail::num(t["group"], "group");
  }
  if (j.contains("matrix")) cfg.matrix = parse_matrix(j["matrix"]);
  if (j.contains("kernel")) {
    const auto& k = j["kernel"];
    KernelSpec ks;
    if (k.contains("beta")) ks.beta = cfgdetail::num(k["beta"], "kernel.beta");
    if (k.contains("omega")) {
      const auto& o = k["omega"];
      ks.omega.type = o.value("type", std::string("trig"));
      if (ks.omega.type == "trig") {
        if (o.contains("cos"))
          ks.omega.cos_coeff = cfgdetail::num_array(o["cos"], "omega.cos");
        if (o.contains("sin"))
          ks.omega.sin_coeff = cfgdetail::num_array(o["sin"], "omega.sin");
      } else if (ks.omega.type == "poly") {
        for (const auto& t : cfgdetail::need(o, "terms", "kernel.omega")) {
          double c = cfgdetail::num(cfgdetail::need(t, "coeff", "omega term"),
                                    "omega coeff");
          std::vector<int> p;
          for (const auto& e :
               cfgdetail::need(t, "powers", "omega term"))
            p.push_back(static_cast<int>(cfgdetail::num(e, "omega power")));
          ks.omega.monomials.push_back({c, p});
        }
      } else {
        throw SchemaError("config: omega.type must be trig or poly");
      }
    }
    if (k.contains("h")) {
      const auto& h = k["h"];
      ks.h_type = h.value("type", std::string("one"));
      if (ks.h_type == "constant")
        ks.h_value = cfgdetail::num(cfgdetail::need(h, "value", "kernel.h"),
                                    "h.value");
      else if (ks.h_type == "dyadic_steps") {
        ks.h_j0 = static_cast<int>(
            cfgdetail::num(cfgdetail::need(h, "j0", "kernel.h"), "h.j0"));
        ks.h_steps =
            cfgdetail::num_array(cfgdetail::need(h, "values", "kernel.h"),
                                 "h.values");
      } else if (ks.h_type != "one") {
        throw SchemaError("config: h.type must be one, constant or "
                          "dyadic_steps");
      }
    }
    if (k.contains("curve"))
      ks.curve = cfgdetail::num_array(k["curve"], "kernel.curve");
    cfg.kernel = std::move(ks);
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    cfg.sweep.mode = s.value("mode", std::string("theorem5"));
    if (cfg.sweep.mode != "theorem5" && cfg.sweep.mode != "corollary" &&
        cfg.sweep.mode != "lemma2")
      throw SchemaError("config: sweep.mode must be theorem5, corollary or "
                        "lemma2");
    if (s.contains("eta"))
      cfg.sweep.eta = cfgdetail::num_array(s["eta"], "sweep.eta");
    if (s.contains("zeta"))
      cfg.sweep.zeta = cfgdetail::num_array(s["zeta"], "sweep.zeta");
    if (s.contains("lambda_min"))
      cfg.sweep.lambda_min = cfgdetail::num(s["lambda_min"], "lambda_min");
    if (s.contains("lambda_max"))
      cfg.sweep.lambda_max = cfgdetail::num(s["lambda_max"], "lambda_max");
    if (s.contains("points"))
      cfg.sweep.points = static_cast<int>(cfgdetail::num(s["points"],
                                                         "points"));
    if (s.contains("interval")) {
      auto iv = cfgdetail::num_array(s["interval"], "sweep.interval");
      if (iv.size() != 2)
        throw SchemaError("config: sweep.interval must have two entries");
      cfg.sweep.interval_lo = iv[0];
      cfg.sweep.interval_hi = iv[1];
    }
    cfg.sweep.weight = s.value("weight", std::string("dt"));
    if (cfg.sweep.weight != "dt" && cfg.sweep.weight != "dt_over_t")
      throw SchemaError("config: sweep.weight must be dt or dt_over_t");
    if (s.contains("tol")) cfg.sweep.tol = cfgdetail::num(s["tol"], "tol");
  }
  if (j.contains("measures")) {
    const auto& m = j["measures"];
    if (m.contains("modes")) {
      cfg.measures.modes.clear();
      for (const auto& v : m["modes"]) {
        std::string mode = v.get<std::string>();
        if (mode != "eq2_2" && mode != "eq2_3" && mode != "eq2_4" &&
            mode != "eq2_5" && mode != "lemma1")
          throw SchemaError("config: unknown measures mode " + mode);
        cfg.measures.modes.push_back(mode);
      }
    }
    if (m.contains("k"))
      cfg.measures.k = static_cast<int>(cfgdetail::num(m["k"], "measures.k"));
    if (m.contains("xi_direction"))
      cfg.measures.xi_direction =
          cfgdetail::num_array(m["xi_direction"], "xi_direction");
    if (m.contains("eta_freq"))
      cfg.measures.eta_freq = cfgdetail::num_array(m["eta_freq"], "eta_freq");
    if (m.contains("x_min"))
      cfg.measures.x_min = cfgdetail::num(m["x_min"], "x_min");
    if (m.contains("x_max"))
      cfg.measures.x_max = cfgdetail::num(m["x_max"], "x_max");
    if (m.contains("lemma1_x_max"))
      cfg.measures.lemma1_x_max =
          cfgdetail::num(m["lemma1_x_max"], "lemma1_x_max");
    if (m.contains("points"))
      cfg.measures.points =
          static_cast<int>(cfgdetail::num(m["points"], "points"));
    if (m.contains("q")) cfg.measures.q = cfgdetail::num(m["q"], "q");
    if (m.contains("s")) cfg.measures.s = cfgdetail::num(m["s"], "s");
    if (m.contains("resolution"))
      cfg.measures.resolution =
          static_cast<int>(cfgdetail::num(m["resolution"], "resolution"));
  }
  if (j.contains("extrapolate")) {
    const auto& e = j["extrapolate"];
    if (e.contains("a")) cfg.extrapolate.a = cfgdetail::num(e["a"], "a");
    if (e.contains("m_max"))
      cfg.extrapolate.m_max =
          static_cast<int>(cfgdetail::num(e["m_max"], "m_max"));
    if (e.contains("block_lo"))
      cfg.extrapolate.block_lo =
          static_cast<int>(cfgdetail::num(e["block_lo"], "block_lo"));
    if (e.contains("block_hi"))
      cfg.extrapolate.block_hi =
          static_cast<int>(cfgdetail::num(e["block_hi"], "block_hi"));
    if (e.contains("resolution"))
      cfg.extrapolate.resolution =
          static_cast<int>(cfgdetail::num(e["resolution"], "resolution"));
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("config: cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw SchemaError(std::string("config: JSON parse error: ") + e.what());
  }
  return parse_config(j);
}

inline Json config_to_json(const RunConfig& cfg) {
  Json j;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["resolution"] = cfg.resolution;
  j["q_dual"] = cfg.q_dual;
  j["samples"] = cfg.samples;
  j["tolerances"] = {{"tol", cfg.tol},
                     {"spectral", cfg.spectral_tol},
                     {"residual", cfg.residual_tol},
                     {"group", cfg.group_tol}};
  if (cfg.matrix) {
    Json rows = Json::array();
    for (int r = 0; r < cfg.matrix->rows(); ++r) {
      Json row = Json::array();
      for (int c = 0; c < cfg.matrix->cols(); ++c)
        row.push_back((*cfg.matrix)(r, c));
      rows.push_back(row);
    }
    j["matrix"] = rows;
  }
  if (cfg.kernel) {
    const auto& k = *cfg.kernel;
    Json kj;
    kj["beta"] = k.beta;
    Json oj;
    oj["type"] = k.omega.type;
    if (k.omega.type == "trig") {
      oj["cos"] = k.omega.cos_coeff;
      oj["sin"] = k.omega.sin_coeff;
    } else {
      Json terms = Json::array();
      for (const auto& [c, p] : k.omega.monomials)
        terms.push_back({{"coeff", c}, {"powers", p}});
      oj["terms"] = terms;
    }
    kj["omega"] = oj;
    Json hj;
    hj["type"] = k.h_type;
    if (k.h_type == "constant") hj["value"] = k.h_value;
    if (k.h_type == "dyadic_steps") {
      hj["j0"] = k.h_j0;
      hj["values"] = k.h_steps;
    }
    kj["h"] = hj;
    kj["curve"] = k.curve;
    j["kernel"] = kj;
  }
  j["sweep"] = {{"mode", cfg.sweep.mode},
                {"eta", cfg.sweep.eta},
                {"zeta", cfg.sweep.zeta},
                {"lambda_min", cfg.sweep.lambda_min},
                {"lambda_max", cfg.sweep.lambda_max},
                {"points", cfg.sweep.points},
                {"interval", {cfg.sweep.interval_lo, cfg.sweep.interval_hi}},
                {"weight", cfg.sweep.weight},
                {"tol", cfg.sweep.tol}};
  j["measures"] = {{"modes", cfg.measures.modes},
                   {"k", cfg.measures.k},
                   {"xi_direction", cfg.measures.xi_direction},
                   {"eta_freq", cfg.measures.eta_freq},
                   {"x_min", cfg.measures.x_min},
                   {"x_max", cfg.measures.x_max},
                   {"lemma1_x_max", cfg.measures.lemma1_x_max},
                   {"points", cfg.measures.points},
                   {"q", cfg.measures.q},
                   {"s", cfg.measures.s},
                   {"resolution", cfg.measures.resolution}};
  j["extrapolate"] = {{"a", cfg.extrapolate.a},
                      {"m_max", cfg.extrapolate.m_max},
                      {"block_lo", cfg.extrapolate.block_lo},
                      {"block_hi", cfg.extrapolate.block_hi},
                      {"resolution", cfg.extrapolate.resolution}};
  return j;
}

/// Materialize the omega/h/curve specs into a RoughKernel.
inline RoughKernel build_kernel(const KernelSpec& spec, const Matrix& B) {
  RoughKernel k;
  k.beta = spec.beta;
  k.curve.exponents = spec.curve;
  if (spec.omega.type == "trig") {
    if (B.rows() != 2)
      throw SchemaError("config: trig omega requires n = 2");
    Eigen::SelfAdjointEigenSolver<Matrix> es(B);
    Matrix root = es.eigenvectors() *
                  es.eigenvalues().cwiseSqrt().asDiagonal() *
                  es.eigenvectors().transpose();
    auto cosc = spec.omega.cos_coeff;
    auto sinc = spec.omega.sin_coeff;
    k.omega = [root, cosc, sinc](const Vector& th) {
      Vector u = root * th;  // preimage on the unit circle
      double phi = std::atan2(u[1], u[0]);
      double acc = 0.0;
      for (std::size_t m = 0; m < cosc.size(); ++m)
        acc += cosc[m] * std::cos(static_cast<double>(m) * phi);
      for (std::size_t m = 0; m < sinc.size(); ++m)
        acc += sinc[m] * std::sin(static_cast<double>(m) * phi);
      return acc;
    };
  } else {
    auto mono = spec.omega.monomials;
    k.omega = [mono](const Vector& th) {
      double acc = 0.0;
      for (const auto& [c, powers] : mono) {
        double term = c;
        for (std::size_t i = 0; i < powers.size() &&
                                i < static_cast<std::size_t>(th.size());
             ++i)
          term *= std::pow(th[i], powers[i]);
        acc += term;
      }
      return acc;
    };
  }
  if (spec.h_type == "one")
    k.h = RadialProfile::one();
  else if (spec.h_type == "constant")
    k.h = RadialProfile::constant(spec.h_value);
  else
    k.h = RadialProfile::dyadic(spec.h_j0, spec.h_steps);
  return k;
}

}  // namespace aniso
