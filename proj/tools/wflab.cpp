// Command-line front end: wflab --config run.json --out results/ [--seed N] [--threads N]

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "wflab/cli.hpp"
#include "wflab/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Wright-Fisher selection inference toolkit"};
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--threads", threads, "worker threads, 0 = all cores");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: config-error: cannot read " << config_path << "\n";
    return 1;
  }
  std::stringstream text;
  text << in.rdbuf();

  try {
    auto config = wflab::parse_config(text.str());
    if (seed) config.seed = *seed;
    return static_cast<int>(wflab::dispatch(config, {out_dir, threads}, std::cout));
  } catch (const wflab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(wflab::exit_code_for(e));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
