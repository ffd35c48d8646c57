// Copyright 2026 The baved-ser Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// baved-synth: writes a small synthetic corpus in the BAVED layout.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "baved/errors.hpp"
#include "baved/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic BAVED-layout corpus generator"};
  std::string out;
  baved::SynthOptions opt;
  app.add_option("--out", out, "Corpus root to create")->required();
  app.add_option("--speakers", opt.speakers, "Number of speakers");
  app.add_option("--words", opt.words, "Words per speaker (1-7)");
  app.add_option("--takes", opt.takes, "Takes per word and level");
  app.add_option("--seed", opt.seed, "Generator seed");
  app.add_option("--min-duration", opt.min_duration_s, "Shortest clip, seconds");
  app.add_option("--max-duration", opt.max_duration_s, "Longest clip, seconds");
  app.add_option("--rates", opt.sample_rates, "Sample rates to draw from");
  app.add_option("--stereo-fraction", opt.stereo_fraction, "Fraction of two-channel files");
  CLI11_PARSE(app, argc, argv);
  try {
    const auto paths = baved::write_synthetic_corpus(out, opt);
    std::printf("wrote %zu recordings under %s\n", paths.size(), out.c_str());
  } catch (const baved::Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  return 0;
}
