#include "specrank/variant_gen.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "json.hpp"
#include "specrank/prompts.hpp"
#include "specrank/retry.hpp"
#include "specrank/unicode.hpp"

namespace specrank {

using nlohmann::json;

std::string_view to_string(JobStatus status) {
  switch (status) {
    case JobStatus::Pending: return "pending";
    case JobStatus::Done: return "done";
    case JobStatus::Failed: return "failed";
  }
  return "unknown";
}

namespace {

JobStatus parse_status(const std::string& s) {
  if (s == "pending") return JobStatus::Pending;
  if (s == "done") return JobStatus::Done;
  if (s == "failed") return JobStatus::Failed;
  throw Error(ErrorKind::ValidationError, "unknown job status '" + s + "'");
}

std::string describe(const std::exception& e) { return e.what(); }

}  // namespace

std::string GenerationJob::key() const { return image_id + "|" + condition.name(); }
std::string GenerationJob::desc_id() const { return image_id + ":" + condition.name(); }

ServiceGenerationClient::ServiceGenerationClient(std::shared_ptr<Transport> transport)
    : transport_(std::move(transport)) {
  if (!transport_) throw Error(ErrorKind::ValidationError, "generation client needs a transport");
}

std::string ServiceGenerationClient::generate(const GenerationRequest& request) {
  json body{{"prompt", request.prompt}};
  if (request.image_b64) body["image_b64"] = *request.image_b64;
  for (const auto& [k, v] : request.options) {
    if (k != "prompt" && k != "image_b64") body[k] = v;
  }
  const std::string reply = transport_->post(body.dump());
  json response;
  try {
    response = json::parse(reply);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ProtocolError, std::string("unparsable generation response: ") + e.what());
  }
  if (!response.is_object() || !response.contains("text") || !response["text"].is_string()) {
    throw Error(ErrorKind::ProtocolError, "generation response lacks a text field");
  }
  return response["text"].get<std::string>();
}

std::optional<std::string> load_local_attachment(const ImageRecord& image) {
  if (!image.source_uri) return std::nullopt;
  std::string path = *image.source_uri;
  if (path.starts_with("file://")) path = path.substr(7);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<GenerationJob> plan_jobs(const Dataset& dataset,
                                     const std::vector<Condition>& conditions,
                                     const std::string& model_tag) {
  std::unordered_map<std::string, const DescriptionRecord*> originals;
  for (const auto& d : dataset.descriptions()) {
    if (d.condition.kind() == Condition::Kind::Original) originals.try_emplace(d.target_image_id, &d);
  }

  std::vector<GenerationJob> jobs;
  jobs.reserve(dataset.images().size() * conditions.size());
  for (const auto& image : dataset.images()) {
    for (const auto& condition : conditions) {
      GenerationJob job;
      job.image_id = image.image_id;
      job.condition = condition;
      job.model_tag = model_tag;
      PromptInputs inputs;
      switch (condition.kind()) {
        case Condition::Kind::Verbose:
          if (auto it = originals.find(image.image_id); it != originals.end()) {
            inputs.original_caption = it->second->text;
          } else if (!image.reference_captions.empty()) {
            inputs.original_caption = image.reference_captions.front();
          }
          break;
        case Condition::Kind::Composite:
          inputs.captions = image.reference_captions;
          break;
        case Condition::Kind::KLimited:
          if (!image.reference_captions.empty()) {
            std::vector<std::size_t> lengths;
            for (const auto& c : image.reference_captions) lengths.push_back(scalar_count(c));
            inputs.k = k_limit(lengths);
          }
          job.k = inputs.k;
          break;
        default:
          break;
      }
      try {
        job.rendered_prompt = build_prompt(condition, inputs);
      } catch (const Error& e) {
        throw Error(e.kind(), "image '" + image.image_id + "': " + e.what());
      }
      if (needs_image(condition)) job.attachment = image.source_uri;
      jobs.push_back(std::move(job));
    }
  }
  return jobs;
}

void write_job_record(std::ostream& out, const GenerationJob& job) {
  json j{{"image_id", job.image_id},
         {"condition", job.condition.name()},
         {"rendered_prompt", job.rendered_prompt},
         {"status", std::string(to_string(job.status))},
         {"model_tag", job.model_tag},
         {"exceeds_limit", job.exceeds_limit}};
  if (job.attachment) j["attachment"] = *job.attachment;
  if (job.k) j["k"] = *job.k;
  if (job.output_text) j["output_text"] = *job.output_text;
  if (job.error) j["error"] = *job.error;
  out << j.dump() << '\n';
}

std::map<std::string, GenerationJob> read_job_ledger(std::istream& in) {
  std::map<std::string, GenerationJob> jobs;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(text);
      GenerationJob job;
      job.image_id = j.at("image_id").get<std::string>();
      job.condition = Condition::parse(j.at("condition").get<std::string>());
      job.rendered_prompt = j.at("rendered_prompt").get<std::string>();
      job.status = parse_status(j.at("status").get<std::string>());
      job.model_tag = j.value("model_tag", "");
      job.exceeds_limit = j.value("exceeds_limit", false);
      if (j.contains("attachment")) job.attachment = j["attachment"].get<std::string>();
      if (j.contains("k")) job.k = j["k"].get<int>();
      if (j.contains("output_text")) job.output_text = j["output_text"].get<std::string>();
      if (j.contains("error")) job.error = j["error"].get<std::string>();
      jobs.insert_or_assign(job.key(), std::move(job));
    } catch (const json::exception& e) {
      // A torn final line from an interrupted run carries no completed work.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw Error(ErrorKind::ParseError, e.what(), line);
    }
  }
  return jobs;
}

VariantRun generate_variants(const Dataset& dataset, const std::vector<Condition>& conditions,
                             GenerationClient& client, const std::string& ledger_path,
                             const GenerateOptions& options) {
  std::string tag = options.model_tag;
  for (const auto& [k, v] : options.client_options) tag += ";" + k + "=" + v;
  tag += ";seed=" + std::to_string(options.seed);

  VariantRun run;
  run.jobs = plan_jobs(dataset, conditions, tag);

  std::map<std::string, GenerationJob> previous;
  if (std::ifstream in(ledger_path); in) previous = read_job_ledger(in);

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < run.jobs.size(); ++i) {
    auto& job = run.jobs[i];
    auto it = previous.find(job.key());
    if (it != previous.end() && it->second.status == JobStatus::Done &&
        it->second.rendered_prompt == job.rendered_prompt && it->second.model_tag == job.model_tag) {
      job = it->second;
    } else {
      todo.push_back(i);
    }
  }

  std::ofstream ledger(ledger_path, std::ios::app);
  if (!ledger) throw Error(ErrorKind::IoError, "cannot open job ledger '" + ledger_path + "'");
  std::mutex ledger_mutex;
  std::atomic<std::size_t> next{0};

  std::map<std::string, std::string> request_options = options.client_options;
  request_options["seed"] = std::to_string(options.seed);

  const auto run_job = [&](GenerationJob& job) {
    try {
      GenerationRequest request;
      request.prompt = job.rendered_prompt;
      request.options = request_options;
      if (needs_image(job.condition)) {
        if (const auto* image = dataset.find_image(job.image_id); image && options.attachments) {
          if (auto bytes = options.attachments(*image)) request.image_b64 = base64_encode(*bytes);
        }
      }
      std::string text = with_retries(options.retry, [&] { return client.generate(request); });
      if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw Error(ErrorKind::EmptyGeneration, "model returned no text");
      }
      if (job.condition.kind() == Condition::Kind::HardLimited) {
        job.exceeds_limit = scalar_count(text) > static_cast<std::size_t>(kHardCharacterLimit);
      } else if (job.condition.kind() == Condition::Kind::KLimited && job.k) {
        job.exceeds_limit = scalar_count(text) > static_cast<std::size_t>(*job.k);
      }
      job.output_text = std::move(text);
      job.status = JobStatus::Done;
      job.error.reset();
    } catch (const std::exception& e) {
      job.status = JobStatus::Failed;
      job.output_text.reset();
      job.error = describe(e);
    }
    std::lock_guard lock(ledger_mutex);
    write_job_record(ledger, job);
    ledger.flush();
  };

  const auto worker = [&] {
    for (std::size_t t = next++; t < todo.size(); t = next++) run_job(run.jobs[todo[t]]);
  };
  const std::size_t workers = std::min(std::max<std::size_t>(1, options.parallelism), todo.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  if (workers > 0) worker();
  for (auto& t : pool) t.join();
  run.requests_issued = todo.size();

  for (const auto& job : run.jobs) {
    if (job.status == JobStatus::Done) {
      DescriptionRecord d;
      d.desc_id = job.desc_id();
      d.target_image_id = job.image_id;
      d.condition = job.condition;
      d.text = *job.output_text;
      d.char_length = scalar_count(d.text);
      run.records.push_back(std::move(d));
    } else {
      run.failures.push_back(job);
    }
  }
  return run;
}

}  // namespace specrank
