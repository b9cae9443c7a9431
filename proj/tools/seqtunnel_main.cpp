// seqtunnel: stress and displacement fields around sequentially excavated
// shallow tunnels. Subcommands: solve, map-only, verify, sweep.

#include <seqtunnel/config.hpp>
#include <seqtunnel/fields.hpp>
#include <seqtunnel/verify.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace seqtunnel;

namespace {

struct Args {
  std::string config_path;
  int stage = 0;  // 0 = every stage in the config
  std::string out_dir;
};

int thread_count(int n_items) {
  if (const char* env = std::getenv("SEQTUNNEL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1 || v > 1024)
      throw ConfigError("SEQTUNNEL_THREADS must be a positive integer");
    return static_cast<int>(std::min<long>(v, n_items));
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return static_cast<int>(std::min<unsigned>(hc > 0 ? hc : 1, static_cast<unsigned>(n_items)));
}

std::vector<std::size_t> select_stages(const config::RunConfig& cfg, int stage_flag) {
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < cfg.stages.size(); ++i)
    if (stage_flag == 0 || cfg.stages[i].stage_index == stage_flag) picked.push_back(i);
  if (picked.empty())
    throw ConfigError("--stage " + std::to_string(stage_flag) + " does not match any configured stage");
  return picked;
}

fs::path prepare_out_dir(const config::RunConfig& cfg, const Args& args) {
  const fs::path out = args.out_dir.empty() ? fs::path(cfg.outputs.directory)
                                            : fs::path(args.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

void write_text_file(const fs::path& p, const std::function<void(std::ostream&)>& emit) {
  std::ofstream os(p, std::ios::binary);  // keep LF line endings everywhere
  if (!os) throw ConfigError("cannot write " + p.string());
  emit(os);
}

void echo_effective_config(const config::RunConfig& cfg, const fs::path& out) {
  write_text_file(out / "effective_config.json",
                  [&](std::ostream& os) { os << cfg.effective().dump(2) << "\n"; });
}

fs::path stage_dir(const fs::path& out, const config::RunConfig& cfg, std::size_t idx) {
  std::string name = "stage_" + std::to_string(cfg.stages[idx].stage_index);
  for (std::size_t j = 0; j < idx; ++j)
    if (cfg.stages[j].stage_index == cfg.stages[idx].stage_index) {
      name += "_" + std::to_string(idx);
      break;
    }
  const fs::path dir = out / name;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

std::vector<double> ground_samples(const config::RunConfig& cfg) {
  const double margin = cfg.thresholds.joint_margin_rel * cfg.x0;
  std::vector<double> xs;
  const int nw = cfg.outputs.ground_points;
  for (int i = 0; i < nw; ++i)
    xs.push_back(-(cfg.x0 - margin) + 2.0 * (cfg.x0 - margin) * i / (nw - 1));
  const int no = 160;
  for (int i = 0; i < no; ++i) {
    const double x =
        (cfg.x0 + margin) * std::pow(100.0 * cfg.x0 / (cfg.x0 + margin),
                                     static_cast<double>(i) / (no - 1));
    xs.push_back(x);
    xs.push_back(-x);
  }
  return xs;
}

void write_coefficients(const rh::SeriesSolution& sol, const fs::path& p) {
  write_text_file(p, [&](std::ostream& os) {
    os << "n,f_re,f_im,a_re,a_im,b_re,b_im\n";
    for (int n = -sol.M - 1; n <= sol.M + 1; ++n) {
      const Complex f = sol.f(n), a = sol.A(n), b = sol.B(n);
      os << n << ',' << format_sci(f.real()) << ',' << format_sci(f.imag()) << ','
         << format_sci(a.real()) << ',' << format_sci(a.imag()) << ','
         << format_sci(b.real()) << ',' << format_sci(b.imag()) << '\n';
    }
  });
}

int cmd_solve(const config::RunConfig& cfg, const Args& args) {
  const std::vector<std::size_t> picked = select_stages(cfg, args.stage);
  const fs::path out = prepare_out_dir(cfg, args);
  const int threads = thread_count(static_cast<int>(picked.size()));
  std::cout << "solve: " << picked.size() << " stage(s), M=" << cfg.solver.M
            << ", threads=" << threads << "\n";

  std::vector<verify::StageSolution> sols(picked.size());
  verify::detail::run_indexed(static_cast<int>(picked.size()), threads, [&](int i) {
    const std::size_t k = static_cast<std::size_t>(i);
    sols[k] = verify::solve_stage(cfg.stages[picked[k]], cfg.material, cfg.x0, cfg.mapping,
                                  cfg.solver);
  });

  for (std::size_t k = 0; k < picked.size(); ++k) {
    const verify::StageSolution& ss = sols[k];
    const fs::path dir = stage_dir(out, cfg, picked[k]);
    double peak = 0.0, disp = 0.0;
    if (cfg.outputs.cavity_profile) {
      const auto cp = fields::cavity_profile(ss.sol, ss.map, cfg.material,
                                             cfg.outputs.cavity_points, cfg.solver.lanczos);
      peak = cp.peak_mises;
      disp = cp.max_displacement;
      write_text_file(dir / "cavity_profile.csv", [&](std::ostream& os) { cp.write_csv(os); });
    }
    if (cfg.outputs.ground_profile) {
      const auto gp = fields::ground_profile(ss.sol, ss.map, cfg.material, cfg.x0,
                                             ground_samples(cfg), cfg.solver.lanczos);
      write_text_file(dir / "ground_profile.csv", [&](std::ostream& os) { gp.write_csv(os); });
    }
    if (cfg.outputs.coefficients) write_coefficients(ss.sol, dir / "coefficients.csv");
    std::cout << "stage " << ss.stage.stage_index << ": eps=" << format_sci(ss.map.epsilon)
              << " m, alpha=" << format_sci(ss.map.alpha) << ", iters=" << ss.sol.iterations
              << ", peak_mises=" << format_sci(peak) << " kPa, max_disp=" << format_sci(disp)
              << " m\n";
  }
  echo_effective_config(cfg, out);
  return 0;
}

int cmd_map_only(const config::RunConfig& cfg, const Args& args) {
  const std::vector<std::size_t> picked = select_stages(cfg, args.stage);
  const fs::path out = prepare_out_dir(cfg, args);
  for (std::size_t k : picked) {
    const auto map =
        conformal::build_map(cfg.stages[k], geometry::GroundSplit{cfg.x0}, cfg.mapping);
    const fs::path dir = stage_dir(out, cfg, k);
    write_text_file(dir / "map_fit.csv", [&](std::ostream& os) {
      os << "x,y,theta,recovered_x,recovered_y,err_m\n";
      for (const Complex& z : map.midpoints_z) {
        const double th = std::arg(map.to_annulus(z));
        const Complex zr = map.from_annulus(std::polar(map.alpha, th));
        os << format_sci(z.real()) << ',' << format_sci(z.imag()) << ',' << format_sci(th) << ','
           << format_sci(zr.real()) << ',' << format_sci(zr.imag()) << ','
           << format_sci(std::abs(zr - z)) << '\n';
      }
    });
    write_text_file(dir / "map_grid.csv", [&](std::ostream& os) {
      os << "rho,theta,x,y\n";
      for (int r = 0; r < 8; ++r) {
        const double rho = map.alpha + (1.0 - map.alpha) * r / 7.0;
        for (int t = 0; t < 256; ++t) {
          const double th = 2.0 * kPi * t / 256.0;
          const Complex z = map.from_annulus(std::polar(rho, th));
          os << format_sci(rho) << ',' << format_sci(th) << ',' << format_sci(z.real()) << ','
             << format_sci(z.imag()) << '\n';
        }
      }
    });
    std::cout << "stage " << cfg.stages[k].stage_index << ": eps=" << format_sci(map.epsilon)
              << " m, alpha=" << format_sci(map.alpha) << "\n";
  }
  echo_effective_config(cfg, out);
  return 0;
}

int cmd_verify(const config::RunConfig& cfg, const Args& args) {
  const std::vector<std::size_t> picked = select_stages(cfg, args.stage);
  const fs::path out = prepare_out_dir(cfg, args);
  std::vector<geometry::StageBoundary> stages;
  for (std::size_t k : picked) stages.push_back(cfg.stages[k]);
  const int threads = thread_count(static_cast<int>(stages.size()));
  const verify::VerificationReport rep = verify::verify_stages(
      stages, cfg.material, cfg.x0, cfg.mapping, cfg.solver, cfg.thresholds, threads);
  write_text_file(out / "verify_report.json", [&](std::ostream& os) { rep.write_json(os); });
  rep.write_text(std::cout);
  echo_effective_config(cfg, out);
  return rep.passed() ? 0 : 1;
}

const geometry::StageBoundary& sweep_stage(const config::RunConfig& cfg, int stage_index) {
  for (const auto& s : cfg.stages)
    if (s.stage_index == stage_index) return s;
  throw ConfigError("sweep.stage_index " + std::to_string(stage_index) +
                    " does not match any configured stage");
}

int cmd_sweep(const config::RunConfig& cfg, const Args& args) {
  if (!cfg.sweep) throw ConfigError("config has no \"sweep\" block");
  const config::SweepSpec& sw = *cfg.sweep;
  const fs::path out = prepare_out_dir(cfg, args);
  const int threads = thread_count(static_cast<int>(sw.values.size()));
  verify::SweepResult sr;
  if (sw.kind == "corner") {
    sr = verify::corner_sweep(sw.stage_index, sw.values, cfg.material, cfg.x0, cfg.mapping,
                              cfg.solver, threads, cfg.density);
  } else if (sw.kind == "kx") {
    sr = verify::kx_sweep(sweep_stage(cfg, sw.stage_index), cfg.material, sw.values, cfg.x0,
                          cfg.mapping, cfg.solver, threads);
  } else {
    sr = verify::x0_convergence(sweep_stage(cfg, sw.stage_index), cfg.material, sw.values,
                                cfg.mapping, cfg.solver, threads);
  }
  write_text_file(out / ("sweep_" + sw.kind + ".csv"),
                  [&](std::ostream& os) { sr.write_csv(os); });
  sr.write_csv(std::cout);
  if (sw.kind == "corner" && sr.peak_mises_kpa.size() >= 2) {
    const double drop =
        100.0 * (sr.peak_mises_kpa.front() - sr.peak_mises_kpa.back()) / sr.peak_mises_kpa.front();
    std::cout << "peak Mises reduction across radii: " << format_sci(drop) << " %\n";
  }
  echo_effective_config(cfg, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stress and displacement fields for sequential shallow tunnel excavation"};
  app.require_subcommand(1);
  Args args;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "path to the JSON run configuration")
        ->required();
    sub->add_option("--stage", args.stage, "restrict to one stage index");
    sub->add_option("--out", args.out_dir, "output directory (overrides outputs.directory)");
  };
  CLI::App* solve = app.add_subcommand("solve", "solve stages and write profiles");
  CLI::App* map_only = app.add_subcommand("map-only", "build and dump the conformal maps");
  CLI::App* verify_cmd = app.add_subcommand("verify", "solve and check verification gates");
  CLI::App* sweep = app.add_subcommand("sweep", "run the configured parameter sweep");
  for (CLI::App* s : {solve, map_only, verify_cmd, sweep}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    const config::RunConfig cfg = config::load(args.config_path);
    if (solve->parsed()) return cmd_solve(cfg, args);
    if (map_only->parsed()) return cmd_map_only(cfg, args);
    if (verify_cmd->parsed()) return cmd_verify(cfg, args);
    return cmd_sweep(cfg, args);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const SolveError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
