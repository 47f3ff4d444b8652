#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ordfem/analysis.hpp"

namespace ordfem::cli {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class StudyKind { Convergence, InfSup, Decomposition, Hypotheses, MeshDump, Matrix };
enum class OutputFormat { Csv, Json };

// acceptance windows enforced by --check
inline constexpr double kRateLo = 0.7;
inline constexpr double kRateHi = 1.3;
inline constexpr double kInfSupDriftMax = 0.25;
inline constexpr double kDecompDriftMax = 0.30;
inline constexpr double kHypothesesDriftMax = 0.30;
inline constexpr double kResidualMax = 1e-10;

struct RunConfig {
  StudyKind study = StudyKind::Convergence;
  ProblemKind problem = ProblemKind::BiLaplacian;
  PairingKind pair = PairingKind::Curl;  // infsup and decomposition studies
  std::vector<int> ns;
  double coeff = 1.0;
  std::string coeff_preset;  // empty = constant coefficient
  SolverChoice solver = SolverChoice::Direct;
  std::string out_path;  // empty = stdout
  OutputFormat format = OutputFormat::Json;
  int quad_degree = 6;
  std::uint64_t seed = kDefaultSeed;
  int samples = 100;  // decomposition targets
  bool check = false;
};

inline std::function<double(const Vec3&)> preset_scalar(const std::string& name) {
  if (name == "oscillatory")
    return [](const Vec3& x) {
      return 1.0 + 0.5 * std::sin(detail::kPi * x[0]) * std::sin(detail::kPi * x[1]) *
                       std::sin(detail::kPi * x[2]);
    };
  throw UsageError("unknown coefficient preset: " + name);
}

inline ProblemSpec problem_spec_from(const RunConfig& cfg, ProblemKind kind) {
  ProblemSpec spec = kind == ProblemKind::BiLaplacian ? bilaplacian_spec(cfg.coeff)
                                                      : quadcurl_spec(cfg.coeff);
  if (!cfg.coeff_preset.empty()) {
    auto a = preset_scalar(cfg.coeff_preset);
    if (kind == ProblemKind::BiLaplacian)
      spec.alpha = a;
    else
      spec.curl_coeff = [a](const Vec3& x) { return Mat3(a(x) * Mat3::Identity()); };
  }
  spec.quad_degree = cfg.quad_degree;
  return spec;
}

namespace detail_cli {

inline void apply_thread_env() {
  const char* v = std::getenv("ORDFEM_THREADS");
  if (!v) return;
  const std::string s(v);
  if (s.empty()) throw UsageError("ORDFEM_THREADS must be a nonnegative integer");
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw UsageError("ORDFEM_THREADS must be a nonnegative integer");
  // every code path is deterministic single-threaded; a cap of 0 (auto) or
  // any positive value therefore runs on one thread
}

inline void validate(const RunConfig& cfg) {
  if (cfg.ns.empty()) throw UsageError("at least one mesh size is required");
  for (std::size_t i = 1; i < cfg.ns.size(); ++i)
    if (cfg.ns[i] <= cfg.ns[i - 1])
      throw UsageError("mesh sizes must be strictly ascending");
  const bool single_mesh = cfg.study == StudyKind::MeshDump || cfg.study == StudyKind::Matrix;
  if (single_mesh && cfg.ns.size() != 1)
    throw UsageError("this subcommand takes exactly one mesh size");
  const int min_n = cfg.study == StudyKind::MeshDump ? 1 : 2;
  for (int n : cfg.ns)
    if (n < min_n)
      throw UsageError("mesh size " + std::to_string(n) +
                       " is below the minimum (empty spaces); need n >= " +
                       std::to_string(min_n));
  if (cfg.study == StudyKind::Convergence) {
    if (cfg.ns.size() < 2) throw UsageError("convergence needs at least two mesh sizes");
    if (!cfg.coeff_preset.empty())
      throw UsageError("convergence requires a constant coefficient (no preset)");
  }
  if (cfg.quad_degree < 1 || cfg.quad_degree > 8)
    throw UsageError("quadrature degree must be in [1,8]");
  if (!(cfg.coeff > 0.0)) throw UsageError("coefficient must be positive");
  if (cfg.samples < 1) throw UsageError("sample count must be >= 1");
  if (!cfg.coeff_preset.empty()) preset_scalar(cfg.coeff_preset);  // name check
}

inline std::string jnum(double v) { return std::isfinite(v) ? fmt_double(v) : "null"; }

inline std::string jarr(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += jnum(v[i]);
  }
  return s + "]";
}

inline std::string jarr(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s + "]";
}

}  // namespace detail_cli

// ---------------------------------------------------------------------------
// Report rendering (deterministic: fixed key order, 17-significant-digit
// floating-point text)
// ---------------------------------------------------------------------------

inline std::string render_convergence_csv(const ConvergenceReport& rep) {
  std::string s = "n,h,dof_u,dof_phi,dof_zeta,err_u_h1,err_phi_h1,err_zeta_ref,rate\n";
  for (const ConvergenceRow& r : rep.rows) {
    s += std::to_string(r.n) + "," + fmt_double(r.h) + "," + std::to_string(r.dof_u) + "," +
         std::to_string(r.dof_phi) + "," + std::to_string(r.dof_zeta) + "," +
         fmt_double(r.err_u) + "," + fmt_double(r.err_phi) + "," + fmt_double(r.err_zeta_ref) +
         "," + fmt_double(r.rate) + "\n";
  }
  return s;
}

inline std::string render_convergence_json(const ConvergenceReport& rep, const RunConfig& cfg) {
  using detail_cli::jnum;
  std::string s = "{\"schema\":\"ordfem/1\",\"study\":\"convergence\",\"problem\":\"" +
                  problem_name(rep.problem) + "\",\"coeff\":" + jnum(cfg.coeff) +
                  ",\"solver\":\"" +
                  (cfg.solver == SolverChoice::Direct ? std::string("direct")
                                                      : std::string("minres")) +
                  "\",\"quad_degree\":" + std::to_string(cfg.quad_degree) +
                  ",\"seed\":" + std::to_string(cfg.seed) + ",\"rows\":[";
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const ConvergenceRow& r = rep.rows[i];
    if (i) s += ",";
    s += "{\"n\":" + std::to_string(r.n) + ",\"h\":" + jnum(r.h) +
         ",\"dof_u\":" + std::to_string(r.dof_u) + ",\"dof_phi\":" + std::to_string(r.dof_phi) +
         ",\"dof_zeta\":" + std::to_string(r.dof_zeta) + ",\"err_u_h1\":" + jnum(r.err_u) +
         ",\"err_phi_h1\":" + jnum(r.err_phi) + ",\"err_zeta_ref\":" + jnum(r.err_zeta_ref) +
         ",\"rate\":" + jnum(r.rate) + "}";
  }
  s += "],\"rate_u\":" + jnum(rep.rate_u) + ",\"rate_phi\":" + jnum(rep.rate_phi) +
       ",\"rate_zeta\":" + jnum(rep.rate_zeta) +
       ",\"solver_residuals\":" + detail_cli::jarr(rep.solver_residuals) + "}\n";
  return s;
}

inline std::string render_infsup_csv(const InfSupStudy& st) {
  std::string s = "n,beta,kernel_dim\n";
  for (std::size_t i = 0; i < st.ns.size(); ++i)
    s += std::to_string(st.ns[i]) + "," + fmt_double(st.betas[i]) + "," +
         std::to_string(st.kernel_dims[i]) + "\n";
  return s;
}

inline std::string render_infsup_json(const InfSupStudy& st, const RunConfig& cfg) {
  return "{\"schema\":\"ordfem/1\",\"study\":\"infsup\",\"pair\":\"" + pairing_name(st.pair) +
         "\",\"ns\":" + detail_cli::jarr(st.ns) + ",\"betas\":" + detail_cli::jarr(st.betas) +
         ",\"kernel_dims\":" + detail_cli::jarr(st.kernel_dims) +
         ",\"quad_degree\":" + std::to_string(cfg.quad_degree) +
         ",\"drift\":" + detail_cli::jnum(st.drift) + "}\n";
}

inline std::string render_decomposition_csv(const DecompStudy& st) {
  std::string s = "n,samples,max_ratio,min_ratio,mean_ratio,max_constraint_residual\n";
  for (std::size_t i = 0; i < st.ns.size(); ++i) {
    const DecompositionReport& r = st.reports[i];
    s += std::to_string(st.ns[i]) + "," + std::to_string(r.samples) + "," +
         fmt_double(r.max_ratio) + "," + fmt_double(r.min_ratio) + "," +
         fmt_double(r.mean_ratio) + "," + fmt_double(r.max_constraint_residual) + "\n";
  }
  return s;
}

inline std::string render_decomposition_json(const DecompStudy& st, const RunConfig& cfg) {
  std::vector<double> maxr, minr, meanr, res;
  for (const DecompositionReport& r : st.reports) {
    maxr.push_back(r.max_ratio);
    minr.push_back(r.min_ratio);
    meanr.push_back(r.mean_ratio);
    res.push_back(r.max_constraint_residual);
  }
  return "{\"schema\":\"ordfem/1\",\"study\":\"decomposition\",\"pair\":\"" +
         decomp_name(st.which) + "\",\"ns\":" + detail_cli::jarr(st.ns) +
         ",\"samples\":" + std::to_string(cfg.samples) +
         ",\"seed\":" + std::to_string(cfg.seed) + ",\"max_ratios\":" + detail_cli::jarr(maxr) +
         ",\"min_ratios\":" + detail_cli::jarr(minr) +
         ",\"mean_ratios\":" + detail_cli::jarr(meanr) +
         ",\"max_constraint_residuals\":" + detail_cli::jarr(res) +
         ",\"drift\":" + detail_cli::jnum(st.drift) + "}\n";
}

inline std::string render_hypotheses_csv(const HypothesesStudy& st) {
  std::string s =
      "n,pi_curl,pi_div,coercivity_bilaplacian,kernel_dim_bilaplacian,coercivity_quadcurl,"
      "kernel_dim_quadcurl\n";
  for (std::size_t i = 0; i < st.ns.size(); ++i)
    s += std::to_string(st.ns[i]) + "," + fmt_double(st.pi_curl[i]) + "," +
         fmt_double(st.pi_div[i]) + "," + fmt_double(st.coercivity_bilap[i]) + "," +
         std::to_string(st.kernel_dim_bilap[i]) + "," + fmt_double(st.coercivity_quadcurl[i]) +
         "," + std::to_string(st.kernel_dim_quadcurl[i]) + "\n";
  return s;
}

inline std::string render_hypotheses_json(const HypothesesStudy& st, const RunConfig& cfg) {
  using detail_cli::jarr;
  using detail_cli::jnum;
  return "{\"schema\":\"ordfem/1\",\"study\":\"hypotheses\",\"ns\":" + jarr(st.ns) +
         ",\"seed\":" + std::to_string(cfg.seed) + ",\"pi_curl\":" + jarr(st.pi_curl) +
         ",\"pi_div\":" + jarr(st.pi_div) +
         ",\"coercivity_bilaplacian\":" + jarr(st.coercivity_bilap) +
         ",\"kernel_dims_bilaplacian\":" + jarr(st.kernel_dim_bilap) +
         ",\"coercivity_quadcurl\":" + jarr(st.coercivity_quadcurl) +
         ",\"kernel_dims_quadcurl\":" + jarr(st.kernel_dim_quadcurl) +
         ",\"drift_pi_curl\":" + jnum(st.drift_pi_curl) +
         ",\"drift_pi_div\":" + jnum(st.drift_pi_div) +
         ",\"drift_coercivity_bilaplacian\":" + jnum(st.drift_coercivity_bilap) +
         ",\"drift_coercivity_quadcurl\":" + jnum(st.drift_coercivity_quadcurl) + "}\n";
}

// ---------------------------------------------------------------------------
// Acceptance-window checks (--check)
// ---------------------------------------------------------------------------

struct CheckResult {
  bool ok = true;
  std::string message;
};

inline void check_fail(CheckResult& c, const std::string& msg) {
  c.ok = false;
  if (!c.message.empty()) c.message += "; ";
  c.message += msg;
}

inline CheckResult check_convergence(const ConvergenceReport& rep) {
  CheckResult c;
  if (!(rep.rate_u >= kRateLo && rep.rate_u <= kRateHi))
    check_fail(c, "rate_u " + fmt_double(rep.rate_u) + " outside [" + fmt_double(kRateLo) + "," +
                      fmt_double(kRateHi) + "]");
  if (!(rep.rate_phi >= kRateLo && rep.rate_phi <= kRateHi))
    check_fail(c, "rate_phi " + fmt_double(rep.rate_phi) + " outside window");
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
    const double a = rep.rows[i].err_zeta_ref, b = rep.rows[i + 1].err_zeta_ref;
    if (std::isfinite(a) && std::isfinite(b) && !(b < a))
      check_fail(c, "auxiliary-variable differences not decreasing");
  }
  for (double r : rep.solver_residuals)
    if (!(r < kResidualMax)) check_fail(c, "solver residual " + fmt_double(r) + " too large");
  return c;
}

inline CheckResult check_infsup(const InfSupStudy& st) {
  CheckResult c;
  for (double b : st.betas)
    if (!(b > 0.0)) check_fail(c, "nonpositive inf-sup constant");
  if (!(st.drift < kInfSupDriftMax))
    check_fail(c, "inf-sup drift " + fmt_double(st.drift) + " >= " + fmt_double(kInfSupDriftMax));
  return c;
}

inline CheckResult check_decomposition(const DecompStudy& st) {
  CheckResult c;
  for (const DecompositionReport& r : st.reports)
    if (!(r.max_constraint_residual < 1e-8)) check_fail(c, "constraint residual too large");
  if (!(st.drift < kDecompDriftMax))
    check_fail(c, "stability-ratio drift " + fmt_double(st.drift) +
                      " >= " + fmt_double(kDecompDriftMax));
  return c;
}

inline CheckResult check_hypotheses(const HypothesesStudy& st) {
  CheckResult c;
  for (double v : st.pi_curl)
    if (!(v > 0.0) || !std::isfinite(v)) check_fail(c, "bad interpolation bound (curl)");
  for (double v : st.pi_div)
    if (!(v > 0.0) || !std::isfinite(v)) check_fail(c, "bad interpolation bound (div)");
  for (double v : st.coercivity_bilap)
    if (!(v > 0.0) || !std::isfinite(v)) check_fail(c, "bad kernel coercivity (bilaplacian)");
  for (double v : st.coercivity_quadcurl)
    if (!(v > 0.0) || !std::isfinite(v)) check_fail(c, "bad kernel coercivity (quadcurl)");
  for (double d : {st.drift_pi_curl, st.drift_pi_div, st.drift_coercivity_bilap,
                   st.drift_coercivity_quadcurl})
    if (!(d < kHypothesesDriftMax)) check_fail(c, "hypothesis constant drift too large");
  return c;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(const RunConfig& cfg, std::ostream& diag = std::cerr) {
  try {
    detail_cli::apply_thread_env();
    detail_cli::validate(cfg);

    std::string text;
    CheckResult check;
    switch (cfg.study) {
      case StudyKind::Convergence: {
        Manufactured mf = manufactured_solution(cfg.problem, cfg.coeff);
        mf.spec.quad_degree = cfg.quad_degree;
        ConvergenceReport rep = convergence_study(mf, cfg.ns, cfg.solver);
        text = cfg.format == OutputFormat::Csv ? render_convergence_csv(rep)
                                               : render_convergence_json(rep, cfg);
        check = check_convergence(rep);
        break;
      }
      case StudyKind::InfSup: {
        InfSupStudy st = infsup_study(cfg.pair, cfg.ns, cfg.quad_degree);
        text = cfg.format == OutputFormat::Csv ? render_infsup_csv(st)
                                               : render_infsup_json(st, cfg);
        check = check_infsup(st);
        break;
      }
      case StudyKind::Decomposition: {
        const DecompKind which =
            cfg.pair == PairingKind::Curl ? DecompKind::Curl : DecompKind::Div;
        DecompStudy st = decomposition_study(which, cfg.ns, cfg.samples, cfg.seed);
        text = cfg.format == OutputFormat::Csv ? render_decomposition_csv(st)
                                               : render_decomposition_json(st, cfg);
        check = check_decomposition(st);
        break;
      }
      case StudyKind::Hypotheses: {
        HypothesesStudy st =
            hypotheses_study(cfg.ns, cfg.seed, problem_spec_from(cfg, ProblemKind::BiLaplacian),
                             problem_spec_from(cfg, ProblemKind::QuadCurl));
        text = cfg.format == OutputFormat::Csv ? render_hypotheses_csv(st)
                                               : render_hypotheses_json(st, cfg);
        check = check_hypotheses(st);
        break;
      }
      case StudyKind::MeshDump: {
        Mesh mesh = build_structured_cube(cfg.ns[0]);
        std::ostringstream os;
        write_mesh_dump(os, mesh);
        text = os.str();
        break;
      }
      case StudyKind::Matrix: {
        Mesh mesh = build_structured_cube(cfg.ns[0]);
        BlockSystem sys = assemble_operator(problem_spec_from(cfg, cfg.problem), mesh);
        std::ostringstream os;
        write_matrix_market(os, sys.M, /*symmetric=*/true);
        text = os.str();
        break;
      }
    }

    if (cfg.out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(cfg.out_path, std::ios::binary);
      if (!out) throw UsageError("output path not writable: " + cfg.out_path);
      out << text;
      if (!out.good()) throw UsageError("failed writing output: " + cfg.out_path);
    }
    if (cfg.check && !check.ok) {
      diag << "check failed: " << check.message << "\n";
      return 2;
    }
    return 0;
  } catch (const UsageError& e) {
    diag << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ordfem::cli
