#include "specrank/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "specrank/analysis.hpp"
#include "specrank/config.hpp"
#include "specrank/contrast_set.hpp"
#include "specrank/dataset.hpp"
#include "specrank/embed_service.hpp"
#include "specrank/embedding_store.hpp"
#include "specrank/error.hpp"
#include "specrank/rank_engine.hpp"
#include "specrank/rank_io.hpp"
#include "specrank/report.hpp"
#include "specrank/stats.hpp"
#include "specrank/variant_gen.hpp"

namespace specrank::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  RunConfig config;
  std::ostream& log;
  std::ostream& err;

  fs::path out(const std::string& name) const { return fs::path(config.paths.out_dir) / name; }
};

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw Error(ErrorKind::ValidationError, std::string("no ") + what + " path given");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorKind::MissingArtifact, std::string(what) + " '" + path + "' does not exist");
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_input(const std::string& path, const char* what) {
  require_file(path, what);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read '" + path + "'");
  return in;
}

report::Provenance provenance(const Context& ctx, std::initializer_list<const char*> seeds) {
  report::Provenance p;
  p.config_checksum = ctx.config.checksum();
  for (const char* name : seeds) {
    const std::string n(name);
    if (n == "rank") p.seeds[n] = ctx.config.rank.seed;
    if (n == "stats") p.seeds[n] = ctx.config.stats.seed;
    if (n == "generate") p.seeds[n] = ctx.config.generate.seed;
  }
  return p;
}

/// First line of every JSONL artifact.
void write_jsonl_header(std::ostream& out, const report::Provenance& p, const std::string& artifact) {
  json j{{"kind", "header"}, {"artifact", artifact}, {"config_checksum", p.config_checksum}};
  json seeds = json::object();
  for (const auto& [k, v] : p.seeds) seeds[k] = v;
  j["seeds"] = seeds;
  out << j.dump() << '\n';
}

/// Binary embedding files have a fixed layout, so provenance goes alongside.
void write_sidecar(const fs::path& artifact, const report::Provenance& p) {
  auto out = open_output(artifact.string() + ".provenance");
  out << "specrank " << p.describe() << '\n';
}

stats::BootstrapOptions bootstrap_options(const Context& ctx) {
  stats::BootstrapOptions boot;
  boot.n_resamples = ctx.config.stats.resamples;
  boot.level = ctx.config.stats.level;
  boot.seed = ctx.config.stats.seed;
  boot.threads = ctx.config.threads;
  return boot;
}

std::vector<RankResult> load_ranks(const Context& ctx) {
  auto in = open_input(ctx.config.paths.ranks, "rank file");
  auto results = read_rank_results(in);
  if (!ctx.config.conditions.empty()) {
    std::erase_if(results, [&](const RankResult& r) {
      return std::find(ctx.config.conditions.begin(), ctx.config.conditions.end(), r.condition) ==
             ctx.config.conditions.end();
    });
  }
  if (results.empty()) throw Error(ErrorKind::ValidationError, "rank file has no usable rows");
  return results;
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(Context& ctx) {
  require_file(ctx.config.paths.manifest, "manifest");
  const Dataset dataset = load_manifest(ctx.config.paths.manifest);
  const auto p = provenance(ctx, {});

  auto manifest = open_output(ctx.out("manifest.jsonl"));
  write_jsonl_header(manifest, p, "manifest");
  write_manifest(dataset, manifest);

  std::map<Condition, std::tuple<std::size_t, std::size_t, std::size_t>> per_condition;
  for (const auto& d : dataset.descriptions()) {
    auto& [n, excluded, length] = per_condition[d.condition];
    ++n;
    excluded += d.excluded;
    length += d.char_length;
  }
  auto summary = open_output(ctx.out("dataset_summary.csv"));
  report::write_csv_provenance(summary, p);
  summary << "condition,n_descriptions,n_excluded,mean_char_length\n";
  for (const auto& [c, t] : per_condition) {
    const auto& [n, excluded, length] = t;
    summary << c.name() << ',' << n << ',' << excluded << ','
            << report::format_number(static_cast<double>(length) / static_cast<double>(n)) << '\n';
  }
  ctx.log << "ingest: " << dataset.images().size() << " images, " << dataset.descriptions().size()
          << " descriptions\n";
  return kExitOk;
}

// ---------------------------------------------------------------- embed

int cmd_embed(Context& ctx) {
  require_file(ctx.config.paths.manifest, "manifest");
  if (ctx.config.scorer.endpoint.empty()) {
    throw Error(ErrorKind::ValidationError, "embed needs --embed-endpoint (scorer.endpoint)");
  }
  ctx.config.scorer.validate();
  const Dataset dataset = load_manifest(ctx.config.paths.manifest);
  const auto p = provenance(ctx, {});

  const fs::path image_path = ctx.config.paths.image_embeddings.empty()
                                  ? ctx.out("image_embeddings.bin")
                                  : fs::path(ctx.config.paths.image_embeddings);
  const fs::path text_path = ctx.config.paths.text_embeddings.empty()
                                 ? ctx.out("text_embeddings.bin")
                                 : fs::path(ctx.config.paths.text_embeddings);
  const fs::path exclusion_path = ctx.out("exclusions.jsonl");

  // Previously computed vectors are reused; only missing keys are requested.
  EmbeddingStore images = fs::exists(image_path) ? load_embeddings(image_path.string()) : EmbeddingStore{};
  EmbeddingStore texts = fs::exists(text_path) ? load_embeddings(text_path.string()) : EmbeddingStore{};
  std::map<std::string, ExcludedDescription> exclusions;
  if (fs::exists(exclusion_path)) {
    std::ifstream in(exclusion_path);
    for (auto& e : read_exclusions(in)) exclusions.emplace(e.desc_id, e);
  }

  EmbeddingClient client(std::shared_ptr<Transport>(make_http_transport(ctx.config.scorer.endpoint)));

  std::vector<std::string> image_ids, payloads;
  for (const auto& img : dataset.images()) {
    if (images.contains(img.image_id)) continue;
    auto bytes = load_local_attachment(img);
    if (!bytes) {
      throw Error(ErrorKind::MissingArtifact, "image '" + img.image_id + "' has no readable source_uri");
    }
    image_ids.push_back(img.image_id);
    payloads.push_back(std::move(*bytes));
  }
  if (!payloads.empty()) {
    auto result = client.embed(PayloadKind::Image, payloads);
    for (std::size_t i = 0; i < image_ids.size(); ++i) {
      if (!result.vectors[i]) {
        throw Error(ErrorKind::ProtocolError, "service flagged image '" + image_ids[i] + "' as overflow");
      }
      images.insert(image_ids[i], *result.vectors[i]);
    }
  }

  std::vector<const DescriptionRecord*> pending;
  std::vector<std::string> text_items;
  for (const auto& d : dataset.descriptions()) {
    if (texts.contains(d.desc_id) || exclusions.contains(d.desc_id)) continue;
    pending.push_back(&d);
    text_items.push_back(d.text);
  }
  if (!text_items.empty()) {
    auto result = client.embed(PayloadKind::Text, text_items);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (result.vectors[i]) {
        texts.insert(pending[i]->desc_id, *result.vectors[i]);
      } else {
        exclusions[pending[i]->desc_id] = {pending[i]->desc_id, pending[i]->condition,
                                           ExclusionReason::TokenOverflow};
      }
    }
  }

  save_embeddings(images, image_path.string());
  write_sidecar(image_path, p);
  save_embeddings(texts, text_path.string());
  write_sidecar(text_path, p);
  auto excl = open_output(exclusion_path);
  write_jsonl_header(excl, p, "exclusions");
  std::vector<ExcludedDescription> ordered;
  for (auto& [id, e] : exclusions) ordered.push_back(e);
  write_exclusions(excl, ordered);

  ctx.log << "embed: " << image_ids.size() << " images and " << pending.size()
          << " texts requested, " << exclusions.size() << " excluded\n";
  return kExitOk;
}

// ---------------------------------------------------------------- rank

int cmd_rank(Context& ctx) {
  const auto& paths = ctx.config.paths;
  require_file(paths.manifest, "manifest");
  require_file(paths.image_embeddings, "image embedding file");
  require_file(paths.text_embeddings, "text embedding file");
  ctx.config.scorer.validate();

  const Dataset full = load_manifest(paths.manifest);
  Dataset dataset;
  for (const auto& img : full.images()) dataset.add_image(img);
  for (const auto& d : full.descriptions()) {
    const auto& sel = ctx.config.conditions;
    if (sel.empty() || std::find(sel.begin(), sel.end(), d.condition) != sel.end()) {
      dataset.add_description(d);
    }
  }
  if (!paths.exclusions.empty()) {
    auto in = open_input(paths.exclusions, "exclusion file");
    for (const auto& e : read_exclusions(in)) dataset.exclude(e.desc_id, e.reason);
  }

  const EmbeddingStore images = load_embeddings(paths.image_embeddings);
  const EmbeddingStore texts = load_embeddings(paths.text_embeddings);
  const ContrastSet contrast(images, dataset.sorted_image_ids());

  RankOptions options;
  options.score.block_rows = ctx.config.rank.block_rows;
  options.score.threads = ctx.config.threads;
  options.subsample = ctx.config.rank.subsample;
  options.seed = ctx.config.rank.seed;
  const RankOutput output = rank_all(dataset, texts, contrast, ctx.config.scorer, options);

  const auto p = provenance(ctx, {"rank"});
  auto ranks = open_output(ctx.out("ranks.jsonl"));
  write_jsonl_header(ranks, p, "ranks");
  write_rank_results(ranks, output.results);
  auto excluded = open_output(ctx.out("excluded.jsonl"));
  write_jsonl_header(excluded, p, "excluded");
  write_exclusions(excluded, output.excluded);

  std::map<Condition, std::vector<double>> by_condition;
  for (const auto& r : output.results) by_condition[r.condition].push_back(r.target_rank);
  for (const auto& [c, values] : by_condition) {
    auto cdf_out = open_output(ctx.out("cdf_" + c.name() + ".csv"));
    report::write_csv_provenance(cdf_out, p);
    report::write_cdf_csv(cdf_out, rank_cdf(values));
  }
  ctx.log << "rank: " << output.results.size() << " ranked against " << contrast.size()
          << " images, " << output.excluded.size() << " excluded\n";
  return kExitOk;
}

// ---------------------------------------------------------------- analyze

/// Per item (image + condition pair), the share of trials won by the later
/// condition in enum order.
std::map<std::string, double> item_rates(std::span<const analysis::PreferenceTrial> trials) {
  std::map<std::string, std::pair<double, double>> acc;
  for (const auto& t : trials) {
    const bool a_later = t.condition_b < t.condition_a;
    const auto& later = a_later ? t.condition_a : t.condition_b;
    const auto& earlier = a_later ? t.condition_b : t.condition_a;
    auto& [wins, n] = acc[t.image_id + "|" + later.name() + "|" + earlier.name()];
    wins += ((t.chosen == analysis::Side::A) == a_later) ? 1.0 : 0.0;
    n += 1.0;
  }
  std::map<std::string, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

int cmd_analyze(Context& ctx) {
  const auto results = load_ranks(ctx);
  const Condition reference = Condition::parse(ctx.config.stats.reference);
  const auto boot = bootstrap_options(ctx);
  const auto p = provenance(ctx, {"stats"});

  {
    auto out = open_output(ctx.out("condition_means.csv"));
    report::write_csv_provenance(out, p);
    out << "condition,n,mean_char_length,mean_rank,ci_low,ci_high\n";
    for (const auto& s : analysis::condition_summaries(results, boot)) {
      out << s.condition.name() << ',' << s.n << ',' << report::format_number(s.mean_length) << ','
          << report::format_number(s.mean_rank.point) << ','
          << report::format_number(s.mean_rank.lower) << ','
          << report::format_number(s.mean_rank.upper) << '\n';
    }
  }
  {
    const auto d = analysis::rank_design(results, reference, false);
    auto out = open_output(ctx.out("rank_regression.csv"));
    report::write_csv_provenance(out, p);
    report::write_coefficients_csv(out, stats::ols_fit(d.x, d.y, d.names));
  }
  {
    const auto d = analysis::rank_design(results, reference, true);
    auto out = open_output(ctx.out("rank_regression_length.csv"));
    report::write_csv_provenance(out, p);
    report::write_coefficients_csv(out, stats::ols_fit(d.x, d.y, d.names));
  }
  {
    std::set<Condition> levels;
    for (const auto& r : results) levels.insert(r.condition);
    auto out = open_output(ctx.out("condition_effects.csv"));
    report::write_csv_provenance(out, p);
    out << "condition,reference,beta,se,z,p,delta_r2,beta_no_length,z_no_length,p_no_length\n";
    for (const auto& c : levels) {
      if (c == reference) continue;
      const std::vector<Condition> pair{reference, c};
      const auto effect = analysis::condition_effect(results, reference, pair);
      const auto k = effect.full.index_of(analysis::dummy_name(c));
      const auto plain = analysis::rank_design(results, reference, false, pair);
      const auto plain_fit = stats::ols_fit(plain.x, plain.y, plain.names);
      const auto kp = plain_fit.index_of(analysis::dummy_name(c));
      out << c.name() << ',' << reference.name() << ',' << report::format_number(effect.full.beta[k])
          << ',' << report::format_number(effect.full.std_err[k]) << ','
          << report::format_number(effect.full.z[k]) << ','
          << report::format_number(effect.full.p_values[k]) << ','
          << report::format_number(effect.delta_r2) << ','
          << report::format_number(plain_fit.beta[kp]) << ','
          << report::format_number(plain_fit.z[kp]) << ','
          << report::format_number(plain_fit.p_values[kp]) << '\n';
    }
  }
  {
    std::set<Condition> levels;
    for (const auto& r : results) levels.insert(r.condition);
    auto out = open_output(ctx.out("length_slopes.csv"));
    report::write_csv_provenance(out, p);
    out << "condition,n,beta_length,se,z,p\n";
    for (const auto& c : levels) {
      const std::vector<Condition> one{c};
      const auto d = analysis::length_only_design(results, one);
      try {
        const auto fit = stats::ols_fit(d.x, d.y, d.names);
        out << c.name() << ',' << fit.n_obs << ',' << report::format_number(fit.beta[1]) << ','
            << report::format_number(fit.std_err[1]) << ',' << report::format_number(fit.z[1]) << ','
            << report::format_number(fit.p_values[1]) << '\n';
      } catch (const Error& e) {
        // constant length or too few rows: the slope is undefined for this condition
        out << c.name() << ',' << d.y.size() << ",nan,nan,nan,nan\n";
        ctx.log << "analyze: no length slope for " << c.name() << " (" << e.what() << ")\n";
      }
    }
  }

  if (!ctx.config.paths.preferences.empty()) {
    auto in = open_input(ctx.config.paths.preferences, "preference file");
    const auto trials = analysis::read_preference_trials(in);
    const auto d = analysis::preference_design(trials, reference);
    const auto fit = stats::logistic_fit(d.x, d.y, d.names);
    auto out = open_output(ctx.out("preference_regression.csv"));
    report::write_csv_provenance(out, p);
    report::write_coefficients_csv(out, fit);

    auto pairs = open_output(ctx.out("pairwise_preferences.csv"));
    report::write_csv_provenance(pairs, p);
    pairs << "condition,over,n,share,ci_low,ci_high\n";
    for (const auto& pp : analysis::pairwise_preferences(trials, boot)) {
      pairs << pp.winner_candidate.name() << ',' << pp.other.name() << ',' << pp.n << ','
            << report::format_number(pp.share.point) << ','
            << report::format_number(pp.share.lower) << ','
            << report::format_number(pp.share.upper) << '\n';
    }

    if (!ctx.config.paths.specificity.empty()) {
      auto sin = open_input(ctx.config.paths.specificity, "specificity trial file");
      const auto spec_trials = analysis::read_preference_trials(sin);
      const auto pref_rates = item_rates(trials);
      const auto spec_rates = item_rates(spec_trials);
      std::vector<double> x, y;
      for (const auto& [item, rate] : pref_rates) {
        if (auto it = spec_rates.find(item); it != spec_rates.end()) {
          x.push_back(rate);
          y.push_back(it->second);
        }
      }
      const auto corr = stats::pearson_r(x, y);
      auto cout = open_output(ctx.out("preference_correlation.csv"));
      report::write_csv_provenance(cout, p);
      cout << "n_items,r,p\n"
           << x.size() << ',' << report::format_number(corr.r) << ','
           << report::format_number(corr.p_value) << '\n';
    }
  }
  ctx.log << "analyze: " << results.size() << " rank rows, reference " << reference.name() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- generate

int cmd_generate(Context& ctx) {
  require_file(ctx.config.paths.manifest, "manifest");
  if (ctx.config.conditions.empty()) {
    throw Error(ErrorKind::ValidationError, "generate needs --conditions");
  }
  if (ctx.config.generate.endpoint.empty()) {
    throw Error(ErrorKind::ValidationError, "generate needs --gen-endpoint");
  }
  const Dataset dataset = load_manifest(ctx.config.paths.manifest);
  std::optional<std::string> token;
  if (const char* t = std::getenv(kGenerationTokenEnv)) token = t;
  ServiceGenerationClient client(
      std::shared_ptr<Transport>(make_http_transport(ctx.config.generate.endpoint, token)));

  GenerateOptions options;
  options.parallelism = ctx.config.generate.parallelism;
  options.seed = ctx.config.generate.seed;
  options.model_tag = ctx.config.generate.model_tag;
  const std::string ledger =
      ctx.config.paths.ledger.empty() ? ctx.out("jobs.jsonl").string() : ctx.config.paths.ledger;
  const VariantRun run = generate_variants(dataset, ctx.config.conditions, client, ledger, options);

  Dataset merged;
  for (const auto& img : dataset.images()) merged.add_image(img);
  for (const auto& d : dataset.descriptions()) merged.add_description(d);
  for (const auto& d : run.records) {
    if (merged.find_description(d.desc_id) == nullptr) merged.add_description(d);
  }
  const auto p = provenance(ctx, {"generate"});
  auto out = open_output(ctx.out("variants.jsonl"));
  write_jsonl_header(out, p, "manifest");
  write_manifest(merged, out);

  auto failures = open_output(ctx.out("failures.jsonl"));
  write_jsonl_header(failures, p, "failures");
  bool backend_down = false;
  for (const auto& job : run.failures) {
    write_job_record(failures, job);
    if (job.error && job.error->starts_with(to_string(ErrorKind::BackendUnavailable))) {
      backend_down = true;
    }
  }
  ctx.log << "generate: " << run.jobs.size() << " jobs, " << run.requests_issued << " requested, "
          << run.records.size() << " done, " << run.failures.size() << " failed\n";
  return backend_down ? kExitBackend : kExitOk;
}

// ---------------------------------------------------------------- report

int cmd_report(Context& ctx) {
  const auto results = load_ranks(ctx);
  const auto p = provenance(ctx, {"stats"});

  std::map<Condition, std::vector<double>> by_condition;
  for (const auto& r : results) by_condition[r.condition].push_back(r.target_rank);

  std::vector<report::Series> cdf_series;
  {
    auto out = open_output(ctx.out("cdf.csv"));
    report::write_csv_provenance(out, p);
    out << "condition,rank,cum_prop\n";
    for (const auto& [c, ranks] : by_condition) {
      report::Series s;
      s.label = c.name();
      for (const auto& pt : rank_cdf(ranks)) {
        out << c.name() << ',' << report::format_number(pt.rank) << ','
            << report::format_number(pt.cumulative) << '\n';
        s.x.push_back(pt.rank);
        s.y.push_back(pt.cumulative);
      }
      cdf_series.push_back(std::move(s));
    }
  }
  {
    report::ChartSpec spec{"Cumulative distribution of target ranks", "target rank (log scale)",
                           "cumulative proportion", true, true};
    auto out = open_output(ctx.out("cdf.svg"));
    out << report::render_line_chart(spec, cdf_series, p);
  }

  stats::BinningOptions binning;
  binning.bin_width_chars = ctx.config.stats.bin_width;
  binning.min_bin_count = ctx.config.stats.min_bin_count;
  binning.trim = {ctx.config.stats.trim_low, ctx.config.stats.trim_high};
  binning.bootstrap = bootstrap_options(ctx);
  const auto bins = stats::length_binned_means(results, binning);
  {
    auto out = open_output(ctx.out("mean_rank_by_length.csv"));
    report::write_csv_provenance(out, p);
    report::write_binned_csv(out, bins);
  }
  {
    std::vector<report::Series> series;
    for (const auto& [c, rows] : bins) {
      report::Series s;
      s.label = c.name();
      for (const auto& b : rows) {
        s.x.push_back(b.bin_center);
        s.y.push_back(b.mean_rank);
        s.y_low.push_back(b.ci_low);
        s.y_high.push_back(b.ci_high);
      }
      series.push_back(std::move(s));
    }
    report::ChartSpec spec{"Mean rank vs. description length", "description length (characters)",
                           "mean target rank"};
    auto out = open_output(ctx.out("mean_rank_by_length.svg"));
    out << report::render_line_chart(spec, series, p);
  }

  if (!ctx.config.paths.preferences.empty()) {
    auto in = open_input(ctx.config.paths.preferences, "preference file");
    const auto trials = analysis::read_preference_trials(in);
    const auto prefs = analysis::pairwise_preferences(trials, bootstrap_options(ctx));
    auto csv = open_output(ctx.out("preferences.csv"));
    report::write_csv_provenance(csv, p);
    csv << "condition,over,n,share,ci_low,ci_high\n";
    std::vector<report::Bar> bars;
    for (const auto& pp : prefs) {
      csv << pp.winner_candidate.name() << ',' << pp.other.name() << ',' << pp.n << ','
          << report::format_number(pp.share.point) << ',' << report::format_number(pp.share.lower)
          << ',' << report::format_number(pp.share.upper) << '\n';
      bars.push_back({pp.winner_candidate.name() + " over " + pp.other.name(), pp.share.point,
                      pp.share.lower, pp.share.upper});
    }
    report::ChartSpec spec{"Pairwise preferences", "share of trials won", ""};
    auto svg = open_output(ctx.out("preferences.svg"));
    svg << report::render_bar_chart(spec, bars, p);
  }
  ctx.log << "report: " << by_condition.size() << " conditions written to "
          << ctx.config.paths.out_dir << '\n';
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BackendUnavailable:
    case ErrorKind::ProtocolError:
      return kExitBackend;
    default:
      return kExitValidation;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& log, std::ostream& err) {
  CLI::App app{"specrank: length-independent specificity of image descriptions"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seed_text;
  int threads = 0;
  app.add_option("--config", config_path, "Sectioned key=value config file");
  app.add_option("--seed", seed_text, "Seed for every seeded stage");
  app.add_option("--out-dir", out_dir, "Directory for output artifacts");
  app.add_option("--threads", threads, "Worker threads (0 = OpenMP default)");

  // Flag -> config key; flags override the config file.
  std::map<std::string, std::string> flag_values;
  const auto flag = [&](CLI::App* sub, const std::string& name, const std::string& key,
                        const std::string& help) {
    sub->add_option_function<std::string>(
        name, [&flag_values, key](const std::string& v) { flag_values[key] = v; }, help);
  };

  auto* ingest = app.add_subcommand("ingest", "Validate a manifest and summarize it");
  flag(ingest, "--manifest", "paths.manifest", "Manifest (JSONL)");

  auto* embed = app.add_subcommand("embed", "Fetch embeddings from the embedding service");
  flag(embed, "--manifest", "paths.manifest", "Manifest (JSONL)");
  flag(embed, "--embed-endpoint", "scorer.endpoint", "Embedding service URL");
  flag(embed, "--image-embeddings", "paths.image_embeddings", "Image embedding cache");
  flag(embed, "--text-embeddings", "paths.text_embeddings", "Text embedding cache");

  auto* rank = app.add_subcommand("rank", "Rank every description's target image");
  flag(rank, "--manifest", "paths.manifest", "Manifest (JSONL)");
  flag(rank, "--image-embeddings", "paths.image_embeddings", "Image embedding file");
  flag(rank, "--text-embeddings", "paths.text_embeddings", "Text embedding file");
  flag(rank, "--exclusions", "paths.exclusions", "Exclusion records from embed");
  flag(rank, "--subsample", "rank.subsample", "Contrast set size per description");
  flag(rank, "--block-rows", "rank.block_rows", "Descriptions per score block");
  flag(rank, "--weight", "scorer.weight", "CLIPScore weight w");
  flag(rank, "--clamp", "scorer.clamp", "Clamp negative cosines to zero (true/false)");
  flag(rank, "--conditions", "run.conditions", "Comma-separated conditions to rank");

  auto* analyze = app.add_subcommand("analyze", "Regression and preference analyses");
  flag(analyze, "--ranks", "paths.ranks", "Rank file from `rank`");
  flag(analyze, "--reference", "stats.reference", "Reference condition for dummy coding");
  flag(analyze, "--preferences", "paths.preferences", "Preference trials (JSONL)");
  flag(analyze, "--specificity", "paths.specificity", "Specificity-judgment trials (JSONL)");
  flag(analyze, "--resamples", "stats.resamples", "Bootstrap resamples");
  flag(analyze, "--conditions", "run.conditions", "Comma-separated conditions to include");

  auto* generate = app.add_subcommand("generate", "Generate description variants");
  flag(generate, "--manifest", "paths.manifest", "Manifest (JSONL)");
  flag(generate, "--conditions", "run.conditions", "Conditions to generate");
  flag(generate, "--gen-endpoint", "generate.endpoint", "Generation service URL");
  flag(generate, "--ledger", "paths.ledger", "Job ledger (JSONL, appended)");
  flag(generate, "--model-tag", "generate.model_tag", "Model identity recorded with outputs");
  flag(generate, "--parallelism", "generate.parallelism", "Jobs in flight");

  auto* rep = app.add_subcommand("report", "CSV and SVG figures");
  flag(rep, "--ranks", "paths.ranks", "Rank file from `rank`");
  flag(rep, "--preferences", "paths.preferences", "Preference trials (JSONL)");
  flag(rep, "--bin-width", "stats.bin_width", "Length bin width in characters");
  flag(rep, "--min-bin-count", "stats.min_bin_count", "Smallest bin kept");
  flag(rep, "--resamples", "stats.resamples", "Bootstrap resamples");
  flag(rep, "--conditions", "run.conditions", "Comma-separated conditions to include");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    log << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "specrank: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    Context ctx{RunConfig{}, log, err};
    if (!config_path.empty()) {
      require_file(config_path, "config file");
      ctx.config.apply(read_config_file(config_path));
    }
    if (!seed_text.empty()) flag_values["run.seed"] = seed_text;
    if (!out_dir.empty()) flag_values["paths.out_dir"] = out_dir;
    // run.seed first so stage-specific flags could still refine it
    if (auto it = flag_values.find("run.seed"); it != flag_values.end()) {
      ctx.config.apply({*it});
      flag_values.erase(it);
    }
    ctx.config.apply(flag_values);
    if (app.get_option("--threads")->count() > 0) ctx.config.threads = threads;

    std::error_code ec;
    fs::create_directories(ctx.config.paths.out_dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create out dir: " + ec.message());

    if (*ingest) return cmd_ingest(ctx);
    if (*embed) return cmd_embed(ctx);
    if (*rank) return cmd_rank(ctx);
    if (*analyze) return cmd_analyze(ctx);
    if (*generate) return cmd_generate(ctx);
    if (*rep) return cmd_report(ctx);
    return kExitValidation;
  } catch (const Error& e) {
    err << "specrank: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "specrank: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace specrank::cli
