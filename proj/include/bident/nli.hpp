#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bident/error.hpp"

namespace bident::nli {

// Classifier posterior over the three NLI labels for an ordered
// (premise, hypothesis) pair.
struct EntailmentDistribution {
  double contradiction = 0.0;
  double entailment = 0.0;
  double neutral = 0.0;

  bool operator==(const EntailmentDistribution&) const = default;
};

inline constexpr double kSumTolerance = 1e-6;

// Components non-negative, finite, and summing to one within kSumTolerance.
bool is_valid(const EntailmentDistribution& d);

struct PairRequest {
  std::string id;
  std::string premise;
  std::string hypothesis;
};

enum class BackendKind { kRemote, kMock };

inline constexpr std::string_view kMockModelId = "mock-v1";

struct BackendDescriptor {
  BackendKind kind = BackendKind::kMock;
  std::optional<std::string> endpoint;
  // Empty means "whatever the backend reports".
  std::string model_id;
  std::chrono::milliseconds timeout{30000};
};

class BatchError : public BackendError {
 public:
  BatchError(const std::string& message, std::vector<std::string> failed_ids);
  const std::vector<std::string>& failed_ids() const { return failed_ids_; }

 private:
  std::vector<std::string> failed_ids_;
};

// Transport-level classifier. Implementations must be safe to call from
// several threads at once.
class Classifier {
 public:
  virtual ~Classifier() = default;

  // Model identity used as the cache-key component.
  virtual std::string model_id() = 0;
  // Returns the model id reported by the backend; throws BackendError.
  virtual std::string health() = 0;
  // One transport call. Results are in request order.
  virtual std::vector<EntailmentDistribution> classify(std::span<const PairRequest> pairs) = 0;
};

// Deterministic token-coverage classifier used as a test oracle.
EntailmentDistribution mock_classify(std::string_view premise, std::string_view hypothesis);

class MockClassifier final : public Classifier {
 public:
  std::string model_id() override { return std::string(kMockModelId); }
  std::string health() override { return std::string(kMockModelId); }
  std::vector<EntailmentDistribution> classify(std::span<const PairRequest> pairs) override;

  // Number of classify() calls made so far.
  std::size_t transport_calls() const { return calls_.load(); }

 private:
  std::atomic<std::size_t> calls_{0};
};

// HTTP+JSON client for POST /v1/classify and GET /v1/health.
class RemoteClassifier final : public Classifier {
 public:
  RemoteClassifier(std::string endpoint, std::string model_id, std::chrono::milliseconds timeout);

  std::string model_id() override;
  std::string health() override;
  std::vector<EntailmentDistribution> classify(std::span<const PairRequest> pairs) override;

 private:
  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
  std::string model_id_;
};

std::unique_ptr<Classifier> make_classifier(const BackendDescriptor& backend);

EntailmentDistribution classify_pair(std::string_view premise, std::string_view hypothesis,
                                     Classifier& classifier);

struct BatchOptions {
  std::size_t batch_size = 32;
  // Maximum in-flight transport calls.
  std::size_t concurrency = 4;
};

// Validates ids and texts up front, then splits into transport batches that
// may run concurrently. Output order always matches input order.
std::vector<EntailmentDistribution> classify_batch(std::span<const PairRequest> pairs,
                                                   Classifier& classifier,
                                                   const BatchOptions& options = {});

// Persistent JSONL classification cache keyed by (model_id, premise,
// hypothesis). Records for other model ids are ignored on load; the last
// record for a key wins. I/O failures degrade to an in-memory cache with a
// logged warning.
class Cache {
 public:
  Cache(std::filesystem::path path, std::string model_id);
  // In-memory only.
  explicit Cache(std::string model_id);

  Cache(const Cache&) = delete;
  Cache& operator=(const Cache&) = delete;

  const std::string& model_id() const { return model_id_; }
  std::optional<EntailmentDistribution> lookup(std::string_view premise,
                                               std::string_view hypothesis) const;
  void store(std::string_view premise, std::string_view hypothesis,
             const EntailmentDistribution& d);
  std::size_t size() const;
  bool persistent() const;

 private:
  void load();

  std::filesystem::path path_;
  std::string model_id_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, EntailmentDistribution> entries_;
  std::ofstream writer_;
  bool persistent_ = false;
};

// Throws InputError when the cache was opened for a different model.
EntailmentDistribution cached_classify(std::string_view premise, std::string_view hypothesis,
                                       Classifier& classifier, Cache& cache);

// Batch variant: hits are served from `cache` (when non-null), misses go
// through classify_batch and are stored in input order.
std::vector<EntailmentDistribution> cached_classify_batch(std::span<const PairRequest> pairs,
                                                          Classifier& classifier, Cache* cache,
                                                          const BatchOptions& options = {});

}  // namespace bident::nli
