#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ordfem/cli.hpp"

namespace {

using ordfem::PairingKind;
using ordfem::ProblemKind;
using ordfem::SolverChoice;
using ordfem::cli::OutputFormat;
using ordfem::cli::RunConfig;
using ordfem::cli::StudyKind;

void add_mesh_option(CLI::App* cmd, RunConfig& cfg, bool required = true) {
  auto* opt = cmd->add_option("--n", cfg.ns, "mesh sizes (comma separated)")->delimiter(',');
  if (required) opt->required();
}

void add_output_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--out", cfg.out_path, "output path (default: stdout)");
  cmd->add_option("--format", cfg.format, "report format")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, OutputFormat>{{"csv", OutputFormat::Csv},
                                              {"json", OutputFormat::Json}},
          CLI::ignore_case));
}

void add_problem_option(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--problem", cfg.problem, "problem kind")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, ProblemKind>{{"bilaplacian", ProblemKind::BiLaplacian},
                                             {"quadcurl", ProblemKind::QuadCurl}},
          CLI::ignore_case));
}

void add_pair_option(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--pair", cfg.pair, "pairing kind")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, PairingKind>{{"curl", PairingKind::Curl},
                                             {"div", PairingKind::Div}},
          CLI::ignore_case));
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"order-reduced mixed finite elements for fourth-order problems on [0,1]^3"};
  app.require_subcommand(1);

  CLI::App* conv = app.add_subcommand("convergence", "manufactured-solution convergence study");
  add_problem_option(conv, cfg);
  add_mesh_option(conv, cfg);
  conv->add_option("--coeff", cfg.coeff, "constant coefficient value");
  conv->add_option("--solver", cfg.solver, "linear solver")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, SolverChoice>{{"direct", SolverChoice::Direct},
                                              {"minres", SolverChoice::Minres}},
          CLI::ignore_case));
  conv->add_option("--quad-degree", cfg.quad_degree, "assembly quadrature degree");
  conv->add_option("--seed", cfg.seed, "random seed");
  conv->add_flag("--check", cfg.check, "exit 2 if acceptance windows are violated");
  add_output_options(conv, cfg);

  CLI::App* infsup = app.add_subcommand("infsup", "discrete inf-sup constants");
  add_pair_option(infsup, cfg);
  add_mesh_option(infsup, cfg);
  infsup->add_option("--quad-degree", cfg.quad_degree, "assembly quadrature degree");
  infsup->add_flag("--check", cfg.check, "exit 2 if acceptance windows are violated");
  add_output_options(infsup, cfg);

  CLI::App* decomp = app.add_subcommand("decomposition", "regular-decomposition stability");
  add_pair_option(decomp, cfg);
  add_mesh_option(decomp, cfg);
  decomp->add_option("--samples", cfg.samples, "number of random targets");
  decomp->add_option("--seed", cfg.seed, "random seed");
  decomp->add_flag("--check", cfg.check, "exit 2 if acceptance windows are violated");
  add_output_options(decomp, cfg);

  CLI::App* hyp = app.add_subcommand("hypotheses", "framework hypothesis constants");
  add_mesh_option(hyp, cfg);
  hyp->add_option("--coeff", cfg.coeff, "constant coefficient value");
  hyp->add_option("--coeff-preset", cfg.coeff_preset, "named variable-coefficient preset");
  hyp->add_option("--seed", cfg.seed, "random seed");
  hyp->add_flag("--check", cfg.check, "exit 2 if acceptance windows are violated");
  add_output_options(hyp, cfg);

  CLI::App* dump = app.add_subcommand("meshdump", "plain-text mesh dump");
  add_mesh_option(dump, cfg);
  dump->add_option("--out", cfg.out_path, "output path (default: stdout)");

  CLI::App* matrix = app.add_subcommand("matrix", "MatrixMarket export of the operator");
  add_problem_option(matrix, cfg);
  add_mesh_option(matrix, cfg);
  matrix->add_option("--coeff", cfg.coeff, "constant coefficient value");
  matrix->add_option("--coeff-preset", cfg.coeff_preset, "named variable-coefficient preset");
  matrix->add_option("--quad-degree", cfg.quad_degree, "assembly quadrature degree");
  matrix->add_option("--out", cfg.out_path, "output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  if (conv->parsed())
    cfg.study = StudyKind::Convergence;
  else if (infsup->parsed())
    cfg.study = StudyKind::InfSup;
  else if (decomp->parsed())
    cfg.study = StudyKind::Decomposition;
  else if (hyp->parsed())
    cfg.study = StudyKind::Hypotheses;
  else if (dump->parsed())
    cfg.study = StudyKind::MeshDump;
  else
    cfg.study = StudyKind::Matrix;

  return ordfem::cli::run(cfg);
}
