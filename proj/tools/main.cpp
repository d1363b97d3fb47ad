#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cilm/app.hpp"
#include "cilm/errors.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"Composite spatial individual-level epidemic models"};
  cli.require_subcommand(1);
  cilm::app::Options opts;
  std::string out = ".";
  std::string config;
  for (const auto& name : cilm::app::command_names()) {
    auto* sub = cli.add_subcommand(name);
    sub->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "top-level seed");
    sub->add_option("--workers", opts.workers, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", out, "output directory");
  }
  CLI11_PARSE(cli, argc, argv);
  opts.config = config;
  opts.out = out;
  const std::string command = cli.get_subcommands().front()->get_name();
  try {
    for (const auto& f : cilm::app::run_command(command, opts)) std::cout << (opts.out / f).string() << '\n';
  } catch (const cilm::ValidationError& e) {
    std::cerr << "cilm " << command << ": invalid input: " << e.what() << '\n';
    return 2;
  } catch (const cilm::UsageError& e) {
    std::cerr << "cilm " << command << ": " << e.what() << '\n';
    return 2;
  } catch (const cilm::DomainError& e) {
    std::cerr << "cilm " << command << ": parameter out of range: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cilm " << command << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
