#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "../common/oracles.hpp"
#include "httplib.h"
#include "json.hpp"
#include "specrank/cli.hpp"
#include "specrank/embedding_store.hpp"
#include "specrank/rank_io.hpp"
#include "specrank/variant_gen.hpp"
#include "test_util.hpp"

using namespace specrank;
using nlohmann::json;
using testutil::TempDir;

namespace {

struct RunResult {
  int code;
  std::string log;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  std::ostringstream log, err;
  const int code = cli::run(args, log, err);
  return {code, log.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::map<std::string, std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (header.empty()) {
      header = cells;
      continue;
    }
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(row);
  }
  return rows;
}

/// Five images on distinct directions and three descriptions.
struct FiveImageFixture {
  TempDir dir{"cli5"};
  std::vector<std::vector<float>> images{
      {1, 0, 0, 0}, {0, 1, 0, 0}, {0.6f, 0.8f, 0, 0}, {0, 0, 1, 0}, {0.3f, 0.1f, 0.5f, 0.8f}};
  std::map<std::string, std::pair<std::size_t, std::vector<float>>> texts{
      {"d1", {0, {0.9f, 0.4f, 0.1f, 0.0f}}},
      {"d2", {3, {0.2f, 0.3f, 0.35f, 0.9f}}},
      {"d3", {1, {0.7f, 0.71f, 0.05f, 0.0f}}}};

  FiveImageFixture() {
    EmbeddingStore img, txt;
    std::ofstream manifest(dir.file("manifest.jsonl"));
    for (std::size_t i = 0; i < images.size(); ++i) {
      const std::string id = "img" + std::to_string(i);
      manifest << json{{"kind", "image"}, {"image_id", id}}.dump() << '\n';
      img.insert(id, EmbeddingVector(images[i]));
    }
    const char* conds[] = {"original", "verbose", "composite"};
    int k = 0;
    for (const auto& [id, t] : texts) {
      manifest << json{{"kind", "description"},
                       {"desc_id", id},
                       {"target_image_id", "img" + std::to_string(t.first)},
                       {"condition", conds[k++]},
                       {"text", "description " + id}}
                      .dump()
               << '\n';
      txt.insert(id, EmbeddingVector(t.second));
    }
    save_embeddings(img, dir.file("images.bin"));
    save_embeddings(txt, dir.file("texts.bin"));
  }

  /// Brute-force ranks from double-precision cosines.
  double oracle_rank(const std::string& id) const {
    const auto& [target, t] = texts.at(id);
    std::vector<float> row;
    for (const auto& im : images) {
      double dot = 0, nt = 0, ni = 0;
      for (std::size_t k = 0; k < 4; ++k) {
        dot += static_cast<double>(t[k]) * im[k];
        nt += static_cast<double>(t[k]) * t[k];
        ni += static_cast<double>(im[k]) * im[k];
      }
      row.push_back(static_cast<float>(2.5 * std::max(0.0, dot / std::sqrt(nt * ni))));
    }
    return oracle::sorted_rank(row, target);
  }

  std::vector<std::string> rank_args(const std::string& out) const {
    return {"--out-dir", out, "rank", "--manifest", dir.file("manifest.jsonl"),
            "--image-embeddings", dir.file("images.bin"), "--text-embeddings", dir.file("texts.bin")};
  }
};

}  // namespace

TEST(Cli, RankFiveImageFixture) {
  FiveImageFixture fx;
  const auto out = fx.dir.file("out");
  const auto r = run_cli(fx.rank_args(out));
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  std::ifstream in(out + "/ranks.jsonl");
  const auto rows = read_rank_results(in);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& row : rows) {
    EXPECT_EQ(row.target_rank, fx.oracle_rank(row.desc_id)) << row.desc_id;
    EXPECT_EQ(row.n_contrast, 5u);
  }
  EXPECT_TRUE(slurp(out + "/ranks.jsonl").starts_with(R"({"artifact":"ranks")"));
  EXPECT_TRUE(std::filesystem::exists(out + "/cdf_original.csv"));
}

TEST(Cli, AnalyzeWithoutRanksIsMissingArtifact) {
  TempDir dir("cli");
  const auto r = run_cli({"--out-dir", dir.file("o"), "analyze", "--ranks", dir.file("nope.jsonl")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("MissingArtifact"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({"--out-dir", dir.file("o"), "analyze"}).code, 1);
}

TEST(Cli, ValidationErrors) {
  FiveImageFixture fx;
  auto args = fx.rank_args(fx.dir.file("o"));
  args.insert(args.end(), {"--conditions", "original,poetic"});
  const auto r = run_cli(args);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ValidationError"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"--config", fx.dir.file("missing.ini"), "ingest"}).code, 1);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  FiveImageFixture fx;
  {
    std::ofstream cfg(fx.dir.file("run.ini"));
    cfg << "[paths]\nmanifest=" << fx.dir.file("manifest.jsonl")
        << "\nimage_embeddings=" << fx.dir.file("images.bin")
        << "\ntext_embeddings=" << fx.dir.file("texts.bin") << "\n[scorer]\nweight=7\n";
  }
  const auto out = fx.dir.file("cfg-out");
  ASSERT_EQ(run_cli({"--config", fx.dir.file("run.ini"), "--out-dir", out, "rank", "--weight", "1"}).code, 0);
  std::ifstream in(out + "/ranks.jsonl");
  for (const auto& row : read_rank_results(in)) EXPECT_LE(row.target_score, 1.0);
}

TEST(Cli, IngestSummarizes) {
  FiveImageFixture fx;
  const auto out = fx.dir.file("ing");
  const auto r = run_cli({"--out-dir", out, "ingest", "--manifest", fx.dir.file("manifest.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(out + "/dataset_summary.csv");
  EXPECT_EQ(rows.size(), 3u);
}

TEST(Cli, ReportCdfDominance) {
  TempDir dir("cli-rep");
  std::vector<RankResult> rows;
  std::mt19937_64 gen(61);
  for (int i = 0; i < 200; ++i) {
    const double b = 1.0 + static_cast<double>(gen() % 400);
    const double a = std::max(1.0, b - 1.0 - static_cast<double>(gen() % 50));
    rows.push_back({"a" + std::to_string(i), Condition::parse("composite"), a, 1.0, 500, 0, 0,
                    static_cast<std::size_t>(40 + gen() % 60)});
    rows.push_back({"b" + std::to_string(i), Condition::parse("original"), b, 1.0, 500, 0, 0,
                    static_cast<std::size_t>(40 + gen() % 60)});
  }
  {
    std::ofstream out(dir.file("ranks.jsonl"));
    write_rank_results(out, rows);
  }
  const auto out = dir.file("o");
  const auto r = run_cli({"--out-dir", out, "report", "--ranks", dir.file("ranks.jsonl"),
                          "--resamples", "200", "--min-bin-count", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::map<std::string, std::vector<std::pair<double, double>>> curves;
  for (const auto& row : read_csv(out + "/cdf.csv")) {
    curves[row.at("condition")].emplace_back(std::stod(row.at("rank")), std::stod(row.at("cum_prop")));
  }
  const auto eval = [](const std::vector<std::pair<double, double>>& c, double x) {
    double v = 0;
    for (const auto& [r, p] : c)
      if (r <= x) v = p;
    return v;
  };
  ASSERT_EQ(curves.size(), 2u);
  for (const auto& key : {"composite", "original"}) {
    for (const auto& [x, p] : curves[key]) {
      EXPECT_GE(eval(curves["composite"], x), eval(curves["original"], x)) << x;
    }
  }
  EXPECT_TRUE(std::filesystem::exists(out + "/cdf.svg"));
  EXPECT_FALSE(read_csv(out + "/mean_rank_by_length.csv").empty());
  EXPECT_TRUE(std::filesystem::exists(out + "/mean_rank_by_length.svg"));
}

TEST(Cli, OutputsIdenticalAcrossThreadCounts) {
  TempDir dir("cli-det");
  std::mt19937_64 gen(62);
  auto inst = oracle::random_instance(gen, 120, 240, 16);
  Dataset varied;
  for (const auto& im : inst.dataset.images()) varied.add_image(im);
  for (auto d : inst.dataset.descriptions()) {
    d.text = std::string(5 + gen() % 60, 'w');
    d.char_length = 0;
    varied.add_description(d);
  }
  {
    std::ofstream m(dir.file("manifest.jsonl"));
    write_manifest(varied, m);
  }
  save_embeddings(inst.images, dir.file("images.bin"));
  save_embeddings(inst.texts, dir.file("texts.bin"));
  std::map<int, std::string> outs;
  for (int threads : {1, 4}) {
    const auto out = dir.file("out" + std::to_string(threads));
    const std::string t = std::to_string(threads);
    ASSERT_EQ(run_cli({"--threads", t, "--seed", "9", "--out-dir", out, "rank", "--manifest",
                       dir.file("manifest.jsonl"), "--image-embeddings", dir.file("images.bin"),
                       "--text-embeddings", dir.file("texts.bin")})
                  .code,
              0);
    const auto ranks = out + "/ranks.jsonl";
    const auto analyzed = run_cli({"--threads", t, "--seed", "9", "--out-dir", out, "analyze",
                                   "--ranks", ranks, "--resamples", "300"});
    ASSERT_EQ(analyzed.code, 0) << analyzed.err;
    ASSERT_EQ(run_cli({"--threads", t, "--seed", "9", "--out-dir", out, "report", "--ranks", ranks,
                       "--resamples", "300", "--min-bin-count", "1"})
                  .code,
              0);
    outs[threads] = out;
  }
  for (const char* f : {"ranks.jsonl", "cdf.csv", "condition_means.csv", "rank_regression.csv",
                        "condition_effects.csv", "mean_rank_by_length.csv", "cdf.svg"}) {
    const auto a = slurp(outs[1] + "/" + f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(outs[4] + "/" + f)) << f;
  }
}

// ---------------------------------------------------------------------------

namespace {

class LocalServer {
 public:
  LocalServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST(Cli, EmbedThenRank) {
  TempDir dir("cli-embed");
  {
    std::ofstream m(dir.file("manifest.jsonl"));
    for (int i = 0; i < 3; ++i) {
      const std::string path = dir.file("img" + std::to_string(i) + ".raw");
      std::ofstream(path) << std::string(static_cast<std::size_t>(i + 1), 'x');
      m << json{{"kind", "image"}, {"image_id", "img" + std::to_string(i)}, {"source_uri", path}}.dump()
        << '\n';
      m << json{{"kind", "description"},
                {"desc_id", "d" + std::to_string(i)},
                {"target_image_id", "img" + std::to_string(i)},
                {"condition", "original"},
                {"text", std::string(static_cast<std::size_t>(i + 1), 't')}}
               .dump()
        << '\n';
    }
    m << json{{"kind", "description"}, {"desc_id", "long"}, {"target_image_id", "img0"},
              {"condition", "verbose"}, {"text", std::string(400, 'w')}}
             .dump()
      << '\n';
  }
  LocalServer srv;
  std::atomic<int> image_requests{0};
  srv.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    json embs = json::array(), overflow = json::array();
    for (std::size_t i = 0; i < body["items"].size(); ++i) {
      const auto item = body["items"][i].get<std::string>();
      if (body["kind"] == "image") {
        ++image_requests;
        // base64 of 1..3 'x' bytes has distinct lengths
        const double n = item == "eA==" ? 0 : (item == "eHg=" ? 1 : 2);
        json v = json::array({0.0, 0.0, 0.0});
        v[static_cast<std::size_t>(n)] = 1.0;
        embs.push_back(v);
      } else if (item.size() > 300) {
        overflow.push_back(i);
        embs.push_back(nullptr);
      } else {
        json v = json::array({0.1, 0.1, 0.1});
        v[item.size() - 1] = 1.0;
        embs.push_back(v);
      }
    }
    res.set_content(json{{"dim", 3}, {"embeddings", embs}, {"overflow_indices", overflow}}.dump(),
                    "application/json");
  });
  const auto out = dir.file("o");
  auto r = run_cli({"--out-dir", out, "embed", "--manifest", dir.file("manifest.jsonl"),
                    "--embed-endpoint", srv.url("/embed")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(image_requests.load(), 3);
  EXPECT_NE(slurp(out + "/exclusions.jsonl").find("token_overflow"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(out + "/image_embeddings.bin.provenance"));

  // cached: a second run requests nothing new
  r = run_cli({"--out-dir", out, "embed", "--manifest", dir.file("manifest.jsonl"),
               "--embed-endpoint", srv.url("/embed")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(image_requests.load(), 3);

  r = run_cli({"--out-dir", out, "rank", "--manifest", dir.file("manifest.jsonl"),
               "--image-embeddings", out + "/image_embeddings.bin", "--text-embeddings",
               out + "/text_embeddings.bin", "--exclusions", out + "/exclusions.jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out + "/ranks.jsonl");
  const auto rows = read_rank_results(in);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& row : rows) EXPECT_EQ(row.target_rank, 1.0) << row.desc_id;
  EXPECT_NE(slurp(out + "/excluded.jsonl").find("token_overflow"), std::string::npos);
}

TEST(Cli, EmbedBackendDownExitsTwo) {
  TempDir dir("cli-down");
  {
    std::ofstream(dir.file("a.raw")) << "bytes";
    std::ofstream m(dir.file("manifest.jsonl"));
    m << json{{"kind", "image"}, {"image_id", "a"}, {"source_uri", dir.file("a.raw")}}.dump() << '\n';
    m << json{{"kind", "description"}, {"desc_id", "d"}, {"target_image_id", "a"},
              {"condition", "original"}, {"text", "t"}}
             .dump()
      << '\n';
  }
  LocalServer srv;
  srv.server().Post("/embed", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const auto r = run_cli({"--out-dir", dir.file("o"), "embed", "--manifest", dir.file("manifest.jsonl"),
                          "--embed-endpoint", srv.url("/embed")});
  EXPECT_EQ(r.code, cli::kExitBackend) << r.err;
  EXPECT_NE(r.err.find("BackendUnavailable"), std::string::npos) << r.err;

  FiveImageFixture fx;
  const auto missing = run_cli({"--out-dir", fx.dir.file("o"), "embed", "--manifest",
                                fx.dir.file("manifest.jsonl"), "--embed-endpoint", srv.url("/embed")});
  EXPECT_EQ(missing.code, cli::kExitValidation) << missing.err;
}

TEST(Cli, GenerateWithTokenAndFailure) {
  TempDir dir("cli-gen");
  {
    std::ofstream m(dir.file("manifest.jsonl"));
    for (int i = 0; i < 4; ++i) {
      m << json{{"kind", "image"}, {"image_id", "img" + std::to_string(i)}}.dump() << '\n';
      m << json{{"kind", "description"}, {"desc_id", "img" + std::to_string(i) + ":original"},
                {"target_image_id", "img" + std::to_string(i)}, {"condition", "original"},
                {"text", "caption " + std::to_string(i)}}
               .dump()
        << '\n';
    }
  }
  LocalServer srv;
  std::atomic<bool> fail_img2{true};
  std::string auth;
  std::mutex mu;
  srv.server().Post("/gen", [&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(mu);
      auth = req.get_header_value("Authorization");
    }
    const auto body = json::parse(req.body);
    if (fail_img2 && body["prompt"].get<std::string>().ends_with("caption 2")) {
      res.status = 503;
      return;
    }
    res.set_content(json{{"text", "longer text for " + body["prompt"].get<std::string>().substr(0, 5)}}.dump(),
                    "application/json");
  });
  ::setenv(kGenerationTokenEnv, "secret-token", 1);
  const auto out = dir.file("o");
  const std::vector<std::string> args{"--out-dir", out, "generate", "--manifest",
                                      dir.file("manifest.jsonl"), "--conditions", "verbose",
                                      "--gen-endpoint", srv.url("/gen"), "--model-tag", "stub-1"};
  auto r = run_cli(args);
  EXPECT_EQ(r.code, cli::kExitBackend) << r.err;
  EXPECT_EQ(auth, "Bearer secret-token");
  EXPECT_NE(slurp(out + "/failures.jsonl").find("img2"), std::string::npos);

  fail_img2 = false;
  r = run_cli(args);
  EXPECT_EQ(r.code, 0) << r.err;
  const auto variants = slurp(out + "/variants.jsonl");
  EXPECT_NE(variants.find("img2:verbose"), std::string::npos);
  ::unsetenv(kGenerationTokenEnv);
}
