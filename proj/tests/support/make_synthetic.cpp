// Writes the raw synthetic corpus used by the committed fixtures.
#include <iostream>

#include "CLI11.hpp"
#include "synthetic.hpp"

int main(int argc, char** argv) {
  hybridsum::testsupport::SyntheticOptions o;
  CLI::App app{"synthetic corpus generator"};
  app.add_option("--seed", o.seed);
  app.add_option("--projects", o.projects);
  app.add_option("--clone-rate", o.clone_rate);
  app.add_option("--auto-generated-rate", o.auto_generated_rate);
  CLI11_PARSE(app, argc, argv);
  std::cout << hybridsum::testsupport::synthetic_jsonl(o);
  return 0;
}
