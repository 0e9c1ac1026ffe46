// Writes a synthetic corpus for end-to-end runs: a manifest, image and text
// embedding files, and pairwise preference trials.
//
// Conditions: original (short, noise sigma_a), verbose (long, sigma_a) and
// composite (long, sigma_c < sigma_a). Text embeddings are
// target + sigma * g / sqrt(dim) with g standard normal.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "specrank/dataset.hpp"
#include "specrank/embedding_store.hpp"
#include "specrank/rng.hpp"

namespace {

using specrank::SplitMix64;

double normal(SplitMix64& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

const char* kWords[] = {"a",     "small", "red",   "bus",    "parked", "near",  "the",
                        "old",   "brick", "wall",  "with",   "two",    "dogs",  "on",
                        "green", "grass", "under", "bright", "sky",    "while", "people"};

std::string filler(SplitMix64& rng, std::size_t length) {
  std::string s;
  while (s.size() < length) {
    if (!s.empty()) s += ' ';
    s += kWords[rng.below(std::size(kWords))];
  }
  s.resize(length);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic specrank fixture"};
  std::string out_dir;
  std::size_t images = 500, dim = 128, trials_per_pair = 300;
  std::uint64_t seed = 7;
  double sigma_a = 6.0, sigma_c = 3.5;
  app.add_option("out_dir", out_dir)->required();
  app.add_option("--images", images);
  app.add_option("--dim", dim);
  app.add_option("--seed", seed);
  app.add_option("--sigma-a", sigma_a);
  app.add_option("--sigma-c", sigma_c);
  app.add_option("--trials", trials_per_pair);
  CLI11_PARSE(app, argc, argv);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  SplitMix64 rng(seed);

  struct Spec {
    const char* condition;
    double sigma;
    std::size_t min_len, max_len;
  };
  const Spec specs[] = {{"original", sigma_a, 35, 70},
                        {"verbose", sigma_a, 180, 320},
                        {"composite", sigma_c, 180, 320}};

  specrank::Dataset dataset;
  specrank::EmbeddingStore image_store, text_store;
  std::vector<std::vector<float>> targets;
  for (std::size_t i = 0; i < images; ++i) {
    std::vector<float> v(dim);
    double norm = 0.0;
    for (auto& x : v) {
      x = static_cast<float>(normal(rng));
      norm += static_cast<double>(x) * x;
    }
    for (auto& x : v) x = static_cast<float>(x / std::sqrt(norm));
    char id[32];
    std::snprintf(id, sizeof id, "img%05zu", i);
    dataset.add_image({id, "synthetic", {}, {}, {}});
    image_store.insert(id, specrank::EmbeddingVector(v));
    targets.push_back(std::move(v));
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t i = 0; i < images; ++i) {
    const std::string image_id = dataset.images()[i].image_id;
    for (const auto& spec : specs) {
      std::vector<float> v(dim);
      for (std::size_t k = 0; k < dim; ++k) {
        v[k] = static_cast<float>(targets[i][k] + spec.sigma * scale * normal(rng));
      }
      const std::size_t len = spec.min_len + rng.below(spec.max_len - spec.min_len + 1);
      const std::string desc_id = image_id + ":" + spec.condition;
      dataset.add_description(
          {desc_id, image_id, specrank::Condition::parse(spec.condition), filler(rng, len), 0, false, {}});
      text_store.insert(desc_id, specrank::EmbeddingVector(v));
    }
  }

  {
    std::ofstream out(fs::path(out_dir) / "manifest.jsonl");
    specrank::write_manifest(dataset, out);
  }
  specrank::save_embeddings(image_store, (fs::path(out_dir) / "image_embeddings.bin").string());
  specrank::save_embeddings(text_store, (fs::path(out_dir) / "text_embeddings.bin").string());

  // Preferences: composite favored over both others, a mild length penalty.
  {
    std::ofstream out(fs::path(out_dir) / "preferences.jsonl");
    const std::pair<const char*, const char*> pairs[] = {
        {"composite", "original"}, {"composite", "verbose"}, {"verbose", "original"}};
    const auto utility = [](const std::string& c) {
      return c == "composite" ? 1.0 : (c == "verbose" ? 0.2 : 0.0);
    };
    std::size_t trial = 0;
    for (const auto& [c1, c2] : pairs) {
      for (std::size_t t = 0; t < trials_per_pair; ++t) {
        const bool swap = rng.below(2) == 1;
        const std::string a = swap ? c2 : c1, b = swap ? c1 : c2;
        const std::size_t image = rng.below(images);
        const auto* da = dataset.find_description(dataset.images()[image].image_id + ":" + a);
        const auto* db = dataset.find_description(dataset.images()[image].image_id + ":" + b);
        const double diff = utility(a) - utility(b) -
                            0.002 * (static_cast<double>(da->char_length) -
                                     static_cast<double>(db->char_length));
        const bool chose_a = rng.uniform() < 1.0 / (1.0 + std::exp(-diff));
        nlohmann::json j{{"trial_id", "t" + std::to_string(trial++)},
                         {"image_id", dataset.images()[image].image_id},
                         {"condition_a", a},
                         {"condition_b", b},
                         {"length_a", da->char_length},
                         {"length_b", db->char_length},
                         {"chosen", chose_a ? "a" : "b"},
                         {"participant_id", "p" + std::to_string(rng.below(40))}};
        out << j.dump() << '\n';
      }
    }
  }
  std::cout << "fixture: " << images << " images, " << dataset.descriptions().size()
            << " descriptions in " << out_dir << '\n';
  return 0;
}
