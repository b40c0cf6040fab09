#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "stencilgrad/adjoint.hpp"
#include "stencilgrad/codegen.hpp"
#include "stencilgrad/examples.hpp"
#include "stencilgrad/interp.hpp"
#include "stencilgrad/specfile.hpp"

namespace sg = stencilgrad;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

bool is_parse_code(const std::string& code) {
  return code == "json-syntax" || code == "missing-field" || code == "bad-field" ||
         code == "expr-syntax" || code == "non-constant-offset" || code == "non-affine-bound" ||
         code == "non-affine-shape";
}

int report_exit_code(const sg::ValidationReport& r) {
  for (const auto& d : r.diagnostics)
    if (is_parse_code(d.code)) return kUsage;
  return kCheckFailed;
}

bool read_file(const std::string& path, std::string* out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream os;
  os << in.rdbuf();
  *out = os.str();
  return true;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << text;
  return bool(out);
}

/// Loads and validates a spec file; on failure prints diagnostics and
/// returns a nonzero exit code.
int load_problem(const std::string& path, sg::Problem* out) {
  std::string text;
  if (!read_file(path, &text)) {
    std::cerr << "cannot read '" << path << "'\n";
    return kUsage;
  }
  auto result = sg::parse_spec(text);
  if (!result.problem) {
    std::cerr << result.report.str();
    return report_exit_code(result.report);
  }
  *out = std::move(*result.problem);
  return kOk;
}

bool parse_sizes(const std::vector<std::string>& items, std::map<std::string, long long>* out,
                 std::string* err) {
  for (const auto& item : items) {
    std::istringstream is(item);
    std::string part;
    while (std::getline(is, part, ',')) {
      auto eq = part.find('=');
      if (eq == std::string::npos || eq == 0) {
        *err = "size bindings must look like n=64";
        return false;
      }
      try {
        (*out)[part.substr(0, eq)] = std::stoll(part.substr(eq + 1));
      } catch (const std::exception&) {
        *err = "bad size value in '" + part + "'";
        return false;
      }
    }
  }
  return true;
}

std::string term_label(const sg::AdjointProgram& prog, std::size_t term) {
  std::ostringstream os;
  os << prog.terms[term].adjoint_array << "(";
  const auto& off = prog.terms[term].input.offset;
  for (std::size_t i = 0; i < off.size(); i++) {
    if (i) os << ",";
    os << off[i];
  }
  os << ")";
  return os.str();
}

std::string bounds_str(const sg::StencilLoopNest& nest) {
  std::ostringstream os;
  for (std::size_t i = 0; i < nest.counters.size(); i++) {
    if (i) os << ", ";
    os << nest.counters[i] << " in [" << nest.bounds[i].lo.str() << ", "
       << nest.bounds[i].hi.str() << "]";
  }
  return os.str();
}

int cmd_validate(const std::string& path) {
  std::string text;
  if (!read_file(path, &text)) {
    std::cerr << "cannot read '" << path << "'\n";
    return kUsage;
  }
  auto result = sg::parse_spec(text);
  if (!result.problem) {
    std::cout << result.report.str();
    return report_exit_code(result.report);
  }
  std::cout << "OK: " << result.problem->name << " accepted\n";
  return kOk;
}

struct GenFlags {
  std::string out_path;
  std::string name;
  bool primal = false;
  bool adjoint = false;
  bool no_parallel = false;
  bool merge = false;
  bool unroll = false;
  bool restrict_ptrs = false;
  bool header = false;
};

int cmd_gen(const std::string& path, const GenFlags& f) {
  sg::Problem p;
  if (int rc = load_problem(path, &p)) return rc;
  sg::EmitOptions opts;
  opts.function_name = f.name;
  opts.parallel = !f.no_parallel;
  opts.merge = f.merge;
  opts.unroll_degenerate = f.unroll;
  opts.restrict_pointers = f.restrict_ptrs;

  std::string source, proto;
  if (f.primal) {
    source = sg::emit_primal(p, opts);
    proto = sg::primal_prototype(p, opts);
  } else {
    auto program = sg::assemble_adjoint(p);
    source = sg::emit_adjoint(p, program, opts);
    proto = sg::adjoint_prototype(p, program, opts);
  }

  if (f.out_path.empty()) {
    std::cout << source;
  } else {
    if (!write_file(f.out_path, source)) {
      std::cerr << "cannot write '" << f.out_path << "'\n";
      return kUsage;
    }
    if (f.header) {
      std::filesystem::path hp(f.out_path);
      hp.replace_extension(".h");
      if (!write_file(hp.string(), proto)) {
        std::cerr << "cannot write '" << hp.string() << "'\n";
        return kUsage;
      }
    }
  }
  return kOk;
}

int cmd_nests(const std::string& path) {
  sg::Problem p;
  if (int rc = load_problem(path, &p)) return rc;
  auto prog = sg::assemble_adjoint(p);
  std::cout << p.name << ": " << prog.nests.size() << " loop nests\n";
  if (prog.nests.empty()) return kOk;
  std::cout << "core: #" << prog.core_index << ", "
            << bounds_str(prog.nests[prog.core_index].nest) << "\n";
  for (std::size_t i = 0; i < prog.nests.size(); i++) {
    const auto& n = prog.nests[i];
    std::cout << "nest " << i << (n.core ? " (core)" : "") << ": " << bounds_str(n.nest) << " | ";
    for (std::size_t t = 0; t < n.terms.size(); t++) {
      if (t) std::cout << " ";
      std::cout << term_label(prog, n.terms[t]);
    }
    std::cout << "\n";
  }
  return kOk;
}

int cmd_verify(const std::string& path, const std::vector<std::string>& sizes,
               std::uint64_t seed, int trials, bool fd, const std::string& json_path) {
  sg::Problem p;
  if (int rc = load_problem(path, &p)) return rc;
  std::map<std::string, long long> bindings;
  std::string err;
  if (!parse_sizes(sizes, &bindings, &err)) {
    std::cerr << err << "\n";
    return kUsage;
  }
  for (const auto& s : p.sizes) {
    if (!bindings.count(s)) {
      std::cerr << "missing binding for size symbol '" << s << "' (use --sizes " << s
                << "=64)\n";
      return kUsage;
    }
  }
  try {
    auto report = sg::verify_problem(p, bindings, seed, trials, fd);
    std::cout << report.text();
    if (!json_path.empty()) {
      if (json_path == "-")
        std::cout << report.json_text();
      else if (!write_file(json_path, report.json_text())) {
        std::cerr << "cannot write '" << json_path << "'\n";
        return kUsage;
      }
    }
    return report.pass() ? kOk : kCheckFailed;
  } catch (const sg::Error& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kCheckFailed;
  }
}

int cmd_example(const std::string& name) {
  try {
    std::cout << sg::example_spec_text(name);
    return kOk;
  } catch (const sg::Error& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  }
}

int run_timed(const std::string& cmd, double* seconds) {
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  char buf[256];
  std::string out;
  while (fgets(buf, sizeof(buf), pipe)) out += buf;
  int rc = pclose(pipe);
  if (rc != 0) return rc;
  try {
    *seconds = std::stod(out);
  } catch (const std::exception&) {
    return -1;
  }
  return 0;
}

/// Emits each variant with a timing driver, compiles with $STENCILGRAD_CC,
/// runs once per thread count and prints CSV. Informational only.
int cmd_bench(const std::string& path, const std::vector<std::string>& sizes,
              const std::string& threads_arg) {
  const char* cc = std::getenv("STENCILGRAD_CC");
  if (!cc || !*cc) {
    std::cerr << "STENCILGRAD_CC is not set; bench needs a C compiler\n";
    return kOk;
  }
  sg::Problem p;
  if (int rc = load_problem(path, &p)) return rc;
  std::map<std::string, long long> bindings;
  std::string err;
  if (!parse_sizes(sizes, &bindings, &err)) {
    std::cerr << err << "\n";
    return kUsage;
  }
  std::vector<int> threads;
  {
    std::istringstream is(threads_arg);
    std::string part;
    while (std::getline(is, part, ',')) threads.push_back(std::atoi(part.c_str()));
    if (threads.empty()) threads = {1};
  }

  sg::EmitOptions opts;
  opts.restrict_pointers = true;
  auto program = sg::assemble_adjoint(p);

  struct Variant {
    std::string label;
    std::string fn;
    std::string source;
    std::string proto;
  };
  std::vector<Variant> variants = {
      {"primal", p.name, sg::emit_primal(p, opts), sg::primal_prototype(p, opts)},
      {"gather-adjoint", p.name + "_b", sg::emit_adjoint(p, program, opts),
       sg::adjoint_prototype(p, program, opts)},
      {"atomic-scatter", p.name + "_scatter_b", sg::emit_scatter_adjoint(p, opts),
       sg::scatter_prototype(p, opts)},
  };

  auto dir = std::filesystem::temp_directory_path() /
             ("stencilgrad-bench-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);

  std::cout << "variant,threads,seconds\n";
  for (const auto& v : variants) {
    // Driver: allocate every referenced array, fill deterministically, time one call.
    std::ostringstream drv;
    drv << "#include <stdio.h>\n#include <stdlib.h>\n#include <time.h>\n\n" << v.proto << "\n";
    drv << "static double frand(unsigned long long *s) {\n"
        << "  *s = *s * 6364136223846793005ull + 1442695040888963407ull;\n"
        << "  return (double)((*s >> 17) & 0xffffffu) / 16777216.0 - 0.5;\n}\n\n";
    drv << "int main(void) {\n";
    for (const auto& [sym, val] : bindings) drv << "  int " << sym << " = " << val << ";\n";
    drv << "  unsigned long long rs = 42;\n";
    // The prototype names every parameter this variant needs, in order.
    std::string params = v.proto.substr(v.proto.find('(') + 1);
    params = params.substr(0, params.rfind(')'));
    std::vector<std::string> array_names;
    std::vector<std::string> scalar_names;
    {
      std::istringstream is(params);
      std::string piece;
      while (std::getline(is, piece, ',')) {
        auto name_pos = piece.find_last_of(" *");
        std::string nm = piece.substr(name_pos + 1);
        if (piece.find('*') != std::string::npos)
          array_names.push_back(nm);
        else if (piece.find("double") != std::string::npos)
          scalar_names.push_back(nm);
      }
    }
    for (const auto& s : scalar_names) drv << "  double " << s << " = 0.25;\n";
    for (const auto& a : array_names) {
      const sg::ArrayDecl* decl = sg::find_array(p, a);
      if (!decl) decl = sg::find_array_by_adjoint(p, a);
      drv << "  size_t len_" << a << " = 1";
      for (const auto& s : decl->shape) drv << " * (size_t)(" << s.str() << ")";
      drv << ";\n";
      drv << "  double *" << a << " = malloc(len_" << a << " * sizeof(double));\n";
      drv << "  for (size_t q = 0; q < len_" << a << "; q++) " << a << "[q] = frand(&rs);\n";
    }
    drv << "  struct timespec t0, t1;\n  clock_gettime(CLOCK_MONOTONIC, &t0);\n  " << v.fn
        << "(";
    {
      bool first = true;
      std::istringstream is(params);
      std::string piece;
      while (std::getline(is, piece, ',')) {
        auto name_pos = piece.find_last_of(" *");
        if (!first) drv << ", ";
        drv << piece.substr(name_pos + 1);
        first = false;
      }
    }
    drv << ");\n  clock_gettime(CLOCK_MONOTONIC, &t1);\n";
    drv << "  printf(\"%.6f\\n\", (t1.tv_sec - t0.tv_sec) + 1e-9 * (t1.tv_nsec - t0.tv_nsec));\n";
    drv << "  return 0;\n}\n";

    auto src = dir / (v.label + ".c");
    auto drvsrc = dir / (v.label + "_main.c");
    auto bin = dir / v.label;
    write_file(src.string(), v.source);
    write_file(drvsrc.string(), drv.str());
    std::string compile = std::string(cc) + " -O2 -fopenmp " + src.string() + " " +
                          drvsrc.string() + " -o " + bin.string() + " -lm 2>&1";
    FILE* pipe = popen(compile.c_str(), "r");
    std::string cc_out;
    if (pipe) {
      char buf[256];
      while (fgets(buf, sizeof(buf), pipe)) cc_out += buf;
      if (pclose(pipe) != 0) {
        std::cerr << "compilation failed for " << v.label << ":\n" << cc_out;
        return kCheckFailed;
      }
    }
    for (int t : threads) {
      double seconds = 0.0;
      std::string cmd = "OMP_NUM_THREADS=" + std::to_string(t) + " " + bin.string();
      if (run_timed(cmd, &seconds) != 0) {
        std::cerr << "run failed for " << v.label << "\n";
        return kCheckFailed;
      }
      std::cout << v.label << "," << t << "," << seconds << "\n";
    }
  }
  std::filesystem::remove_all(dir);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stencil adjoint generator"};
  app.require_subcommand(1);

  std::string spec_path, out_path, fn_name, json_path, example_name, threads = "1";
  std::vector<std::string> sizes;
  std::uint64_t seed = 1;
  int trials = 5;
  bool fd = false;
  GenFlags gen;

  auto* validate_cmd = app.add_subcommand("validate", "check a stencil description");
  validate_cmd->add_option("spec", spec_path, "stencil description (.json)")->required();

  auto* gen_cmd = app.add_subcommand("gen", "generate C code");
  gen_cmd->add_option("spec", spec_path)->required();
  auto* primal_flag = gen_cmd->add_flag("--primal", gen.primal, "emit the primal loop");
  gen_cmd->add_flag("--adjoint", gen.adjoint, "emit the adjoint program")->excludes(primal_flag);
  gen_cmd->add_option("-o,--output", gen.out_path, "output .c path (default stdout)");
  gen_cmd->add_option("--name", gen.name, "generated function name");
  gen_cmd->add_flag("--no-parallel", gen.no_parallel, "omit OpenMP pragmas");
  gen_cmd->add_flag("--merge", gen.merge, "merge statements sharing an lhs");
  gen_cmd->add_flag("--unroll-degenerate", gen.unroll,
                    "emit single-iteration nests as bare statements");
  gen_cmd->add_flag("--restrict", gen.restrict_ptrs, "restrict-qualified array parameters");
  gen_cmd->add_flag("--header", gen.header, "also write a .h prototype next to -o");

  auto* nests_cmd = app.add_subcommand("nests", "print the adjoint loop nest structure");
  nests_cmd->add_option("spec", spec_path)->required();

  auto* verify_cmd = app.add_subcommand("verify", "run the adjoint verification oracles");
  verify_cmd->add_option("spec", spec_path)->required();
  verify_cmd->add_option("--sizes", sizes, "size bindings, e.g. --sizes n=64")->required();
  verify_cmd->add_option("--seed", seed, "PRNG seed (mt19937_64)");
  verify_cmd->add_option("--trials", trials, "dot-product trials");
  verify_cmd->add_flag("--fd", fd, "also run the dot-product / finite-difference check");
  verify_cmd->add_option("--json", json_path, "write the machine-readable report here ('-': stdout)");

  auto* example_cmd = app.add_subcommand("example", "print a bundled stencil description");
  example_cmd->add_option("name", example_name, "lap1d | wave3d | burgers1d")->required();

  auto* bench_cmd =
      app.add_subcommand("bench", "time gather vs atomic-scatter adjoints (needs STENCILGRAD_CC)");
  bench_cmd->add_option("spec", spec_path)->required();
  bench_cmd->add_option("--sizes", sizes, "size bindings")->required();
  bench_cmd->add_option("--threads", threads, "comma-separated thread counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(spec_path);
    if (gen_cmd->parsed()) {
      if (gen.primal == gen.adjoint) {
        std::cerr << "gen needs exactly one of --primal or --adjoint\n";
        return kUsage;
      }
      return cmd_gen(spec_path, gen);
    }
    if (nests_cmd->parsed()) return cmd_nests(spec_path);
    if (verify_cmd->parsed())
      return cmd_verify(spec_path, sizes, seed, trials, fd, json_path);
    if (example_cmd->parsed()) return cmd_example(example_name);
    if (bench_cmd->parsed()) return cmd_bench(spec_path, sizes, threads);
  } catch (const sg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
  return kUsage;
}
