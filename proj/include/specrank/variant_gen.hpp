#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "specrank/condition.hpp"
#include "specrank/dataset.hpp"
#include "specrank/embed_service.hpp"
#include "specrank/error.hpp"

namespace specrank {

enum class JobStatus { Pending, Done, Failed };

struct GenerationJob {
  std::string image_id;
  Condition condition;
  std::string rendered_prompt;
  std::optional<std::string> attachment;  // image reference (source_uri)
  std::optional<int> k;
  JobStatus status = JobStatus::Pending;
  std::optional<std::string> output_text;
  std::string model_tag;
  /// Output longer than the prompt's character cap; kept, only flagged.
  bool exceeds_limit = false;
  std::optional<std::string> error;

  /// Ledger identity: "<image_id>|<condition>".
  std::string key() const;
  std::string desc_id() const;
};

struct GenerationRequest {
  std::string prompt;
  std::optional<std::string> image_b64;
  std::map<std::string, std::string> options;  // pass-through decoding params
};

class GenerationClient {
 public:
  virtual ~GenerationClient() = default;
  /// Returns the generated text. Throws TransportError for retryable
  /// failures and Error for anything else.
  virtual std::string generate(const GenerationRequest& request) = 0;
};

/// Wire contract: request {"prompt":...,"image_b64":...,<options>}, response
/// {"text":...}.
class ServiceGenerationClient : public GenerationClient {
 public:
  explicit ServiceGenerationClient(std::shared_ptr<Transport> transport);
  std::string generate(const GenerationRequest& request) override;

 private:
  std::shared_ptr<Transport> transport_;
};

/// Token variable for the generation service.
inline constexpr const char* kGenerationTokenEnv = "SPECRANK_GEN_TOKEN";

/// Loads image bytes for an image-conditioned prompt; nullopt when there is
/// nothing to attach.
using AttachmentLoader = std::function<std::optional<std::string>(const ImageRecord&)>;

/// Reads `source_uri` as a local file path when it exists.
std::optional<std::string> load_local_attachment(const ImageRecord& image);

/// One job per (image, condition), images in dataset order. Verbose uses the
/// image's original description (or its first reference caption); composite
/// and k_limited use the image's reference captions. Throws the prompt
/// errors (ArityError, MissingLimit, ValidationError) for unusable inputs.
std::vector<GenerationJob> plan_jobs(const Dataset& dataset,
                                     const std::vector<Condition>& conditions,
                                     const std::string& model_tag);

struct GenerateOptions {
  std::size_t parallelism = 4;
  std::uint64_t seed = 0;
  std::string model_tag = "unspecified";
  std::map<std::string, std::string> client_options;
  RetryPolicy retry;
  AttachmentLoader attachments = load_local_attachment;
};

struct VariantRun {
  std::vector<DescriptionRecord> records;   // done jobs, in plan order
  std::vector<GenerationJob> failures;      // failed jobs, in plan order
  std::vector<GenerationJob> jobs;          // final state of every job
  std::size_t requests_issued = 0;          // jobs dispatched in this run
};

/// Append-only job ledger (one GenerationJob JSON object per line). Reading
/// keeps the last record per job key.
std::map<std::string, GenerationJob> read_job_ledger(std::istream& in);
void write_job_record(std::ostream& out, const GenerationJob& job);

/// Dispatches planned jobs with bounded parallelism. Jobs already `done` in
/// `ledger_path` are reused without a request; each finished job is appended
/// to the ledger and flushed before the next result is recorded. Failures are
/// recorded, never dropped, so records + failures == jobs.
VariantRun generate_variants(const Dataset& dataset, const std::vector<Condition>& conditions,
                             GenerationClient& client, const std::string& ledger_path,
                             const GenerateOptions& options = {});

/// Job status name ("pending", "done", "failed").
std::string_view to_string(JobStatus status);

}  // namespace specrank
