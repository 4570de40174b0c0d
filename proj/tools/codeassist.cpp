// codeassist: replay keystroke traces, serve IDE clients, render diffs and
// apply edit scripts.
//
// Exit codes: 0 success, 1 usage, 2 input error, 3 internal error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "codeassist/edit_engine.hpp"
#include "codeassist/error.hpp"
#include "codeassist/harness.hpp"
#include "codeassist/service.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

/// An unreadable input file; reported like any other input error.
struct InputFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputFileError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Completion-serving engine: replay, serve, diff, patch"};
  app.require_subcommand(1);

  std::string trace_path, config_path, report_format = "table";
  auto* replay = app.add_subcommand("replay", "Replay a keystroke trace and print the metrics report");
  replay->add_option("trace", trace_path, "Line-delimited JSON trace")->required();
  replay->add_option("--config", config_path, "Service config (JSON)")->required();
  replay->add_option("--report", report_format, "Report format")->check(CLI::IsMember({"json", "table"}));

  std::string serve_config, listen;
  bool use_stdio = false, wall_clock = false;
  auto* serve = app.add_subcommand("serve", "Serve the line-delimited JSON protocol");
  serve->add_option("--config", serve_config, "Service config (JSON)")->required();
  auto* listen_opt = serve->add_option("--listen", listen, "host:port to listen on");
  serve->add_flag("--stdio", use_stdio, "Speak the protocol on stdin/stdout")->excludes(listen_opt);
  serve->add_flag("--wall-clock", wall_clock, "Advance time from the real clock instead of message timestamps");

  std::string before_path, after_path;
  bool diff_json = false;
  auto* diff = app.add_subcommand("diff", "Render a move-aware line diff");
  diff->add_option("before", before_path)->required();
  diff->add_option("after", after_path)->required();
  diff->add_flag("--json", diff_json, "Emit decorated lines as JSON");

  std::string script_path, file_path;
  bool in_place = false;
  auto* patch = app.add_subcommand("patch", "Apply an anchor-line edit script to a file");
  patch->add_option("script", script_path)->required();
  patch->add_option("file", file_path)->required();
  patch->add_flag("--in-place", in_place, "Overwrite the file instead of printing the result");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*replay) {
      const auto report = codeassist::replay(trace_path, codeassist::load_config(config_path));
      std::cout << (report_format == "json" ? codeassist::report_to_json(report) + "\n"
                                            : codeassist::report_to_table(report));
    } else if (*serve) {
      if (!use_stdio && listen.empty()) {
        std::cerr << "serve: pass --stdio or --listen <host:port>\n";
        return kExitUsage;
      }
      const auto config = codeassist::load_config(serve_config);
      if (use_stdio) codeassist::serve_stdio(config, std::cin, std::cout, wall_clock);
      else codeassist::serve_tcp(config, listen, wall_clock);
    } else if (*diff) {
      const auto rendered = codeassist::render_diff(read_input(before_path), read_input(after_path));
      if (diff_json) std::cout << codeassist::diff_to_json(rendered).dump(2) << "\n";
      else std::cout << codeassist::format_rendered_diff(rendered);
    } else if (*patch) {
      const auto script = codeassist::parse_edit_script(read_input(script_path));
      const auto result = codeassist::apply_edit(script, read_input(file_path));
      if (in_place) {
        std::ofstream(file_path, std::ios::binary | std::ios::trunc) << result;
      } else {
        std::cout << result;
      }
    }
  } catch (const codeassist::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InputFileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}
