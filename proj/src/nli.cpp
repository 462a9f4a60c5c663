#include "bident/nli.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>
#include <unordered_set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bident/text.hpp"

namespace bident::nli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::set<std::string> token_set(std::string_view s) {
  auto tokens = text::lowercase_tokens(s);
  return {std::make_move_iterator(tokens.begin()), std::make_move_iterator(tokens.end())};
}

EntailmentDistribution parse_distribution(const json& rec) {
  EntailmentDistribution d;
  d.contradiction = rec.at("contradiction").get<double>();
  d.entailment = rec.at("entailment").get<double>();
  d.neutral = rec.at("neutral").get<double>();
  return d;
}

void check_result(const EntailmentDistribution& d, std::string_view id) {
  if (!is_valid(d)) {
    throw BackendError(fmt::format(
        "backend returned a malformed distribution for \"{}\" (c={}, e={}, n={})", id,
        d.contradiction, d.entailment, d.neutral));
  }
}

void check_requests(std::span<const PairRequest> pairs) {
  if (pairs.empty()) throw InputError("classification batch is empty");
  std::unordered_set<std::string_view> ids;
  for (const auto& p : pairs) {
    if (!ids.insert(p.id).second) {
      throw InputError(fmt::format("duplicate pair id \"{}\" in batch", p.id));
    }
    if (text::trim(p.premise).empty() || text::trim(p.hypothesis).empty()) {
      throw InputError(fmt::format("pair \"{}\" has an empty premise or hypothesis", p.id));
    }
  }
}

httplib::Client make_client(const std::string& endpoint, std::chrono::milliseconds timeout) {
  httplib::Client client(endpoint);
  if (!client.is_valid()) throw BackendError(fmt::format("invalid endpoint \"{}\"", endpoint));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  return client;
}

[[noreturn]] void throw_transport(const std::string& endpoint, const char* path,
                                  httplib::Error err) {
  if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
    throw BackendError(fmt::format("{}{}: timed out or connection dropped ({})", endpoint, path,
                                   httplib::to_string(err)));
  }
  throw BackendError(
      fmt::format("{}{}: backend unreachable ({})", endpoint, path, httplib::to_string(err)));
}

json parse_body(const std::string& body, const std::string& endpoint, const char* path) {
  try {
    auto parsed = json::parse(body);
    if (!parsed.is_object()) throw BackendError("response is not a JSON object");
    return parsed;
  } catch (const json::exception& e) {
    throw BackendError(fmt::format("{}{}: malformed response: {}", endpoint, path, e.what()));
  }
}

}  // namespace

bool is_valid(const EntailmentDistribution& d) {
  for (double v : {d.contradiction, d.entailment, d.neutral}) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) return false;
  }
  return std::abs(d.contradiction + d.entailment + d.neutral - 1.0) <= kSumTolerance;
}

BatchError::BatchError(const std::string& message, std::vector<std::string> failed_ids)
    : BackendError(fmt::format("{} (failed ids: {})", message, fmt::join(failed_ids, ", "))),
      failed_ids_(std::move(failed_ids)) {}

EntailmentDistribution mock_classify(std::string_view premise, std::string_view hypothesis) {
  const auto hyp = token_set(hypothesis);
  if (hyp.empty()) throw InputError("mock classifier: hypothesis has no tokens");
  if (text::trim(premise).empty()) throw InputError("mock classifier: premise is empty");
  const auto prem = token_set(premise);
  const auto shared = static_cast<double>(std::count_if(
      hyp.begin(), hyp.end(), [&](const std::string& t) { return prem.contains(t); }));
  const double coverage = shared / static_cast<double>(hyp.size());

  EntailmentDistribution d;
  d.entailment = std::clamp(coverage, 0.01, 0.99);
  const double rest = 1.0 - d.entailment;
  d.neutral = 0.7 * rest;
  d.contradiction = 0.3 * rest;
  return d;
}

std::vector<EntailmentDistribution> MockClassifier::classify(std::span<const PairRequest> pairs) {
  ++calls_;
  std::vector<EntailmentDistribution> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(mock_classify(p.premise, p.hypothesis));
  return out;
}

RemoteClassifier::RemoteClassifier(std::string endpoint, std::string model_id,
                                   std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout), model_id_(std::move(model_id)) {
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
  if (endpoint_.empty()) throw InputError("remote backend requires an endpoint");
}

std::string RemoteClassifier::model_id() {
  {
    std::lock_guard lock(mutex_);
    if (!model_id_.empty()) return model_id_;
  }
  auto reported = health();
  std::lock_guard lock(mutex_);
  if (model_id_.empty()) model_id_ = std::move(reported);
  return model_id_;
}

std::string RemoteClassifier::health() {
  auto client = make_client(endpoint_, timeout_);
  auto res = client.Get("/v1/health");
  if (!res) throw_transport(endpoint_, "/v1/health", res.error());
  if (res->status != 200) {
    throw BackendError(fmt::format("{}/v1/health: HTTP {}", endpoint_, res->status));
  }
  const auto body = parse_body(res->body, endpoint_, "/v1/health");
  if (body.value("status", "") != "ok") {
    throw BackendError(fmt::format("{}/v1/health: status is not \"ok\"", endpoint_));
  }
  const auto it = body.find("model_id");
  if (it == body.end() || !it->is_string()) {
    throw BackendError(fmt::format("{}/v1/health: missing model_id", endpoint_));
  }
  return it->get<std::string>();
}

std::vector<EntailmentDistribution> RemoteClassifier::classify(
    std::span<const PairRequest> pairs) {
  ordered_json request;
  request["pairs"] = ordered_json::array();
  for (const auto& p : pairs) {
    request["pairs"].push_back(
        ordered_json{{"id", p.id}, {"premise", p.premise}, {"hypothesis", p.hypothesis}});
  }

  auto client = make_client(endpoint_, timeout_);
  auto res = client.Post("/v1/classify", request.dump(), "application/json");
  if (!res) throw_transport(endpoint_, "/v1/classify", res.error());
  if (res->status != 200) {
    throw BackendError(fmt::format("{}/v1/classify: HTTP {}: {}", endpoint_, res->status,
                                   res->body.substr(0, 200)));
  }
  const auto body = parse_body(res->body, endpoint_, "/v1/classify");

  try {
    const auto reported = body.at("model_id").get<std::string>();
    {
      std::lock_guard lock(mutex_);
      if (!model_id_.empty() && reported != model_id_) {
        throw BackendError(fmt::format("backend reports model \"{}\" but \"{}\" was expected",
                                       reported, model_id_));
      }
    }
    const auto& results = body.at("results");
    if (!results.is_array() || results.size() != pairs.size()) {
      throw BackendError(fmt::format("{}/v1/classify: expected {} results", endpoint_,
                                     pairs.size()));
    }
    std::vector<EntailmentDistribution> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto id = results[i].at("id").get<std::string>();
      if (id != pairs[i].id) {
        throw BackendError(fmt::format("{}/v1/classify: result {} has id \"{}\", expected \"{}\"",
                                       endpoint_, i, id, pairs[i].id));
      }
      auto d = parse_distribution(results[i]);
      check_result(d, id);
      out.push_back(d);
    }
    return out;
  } catch (const json::exception& e) {
    throw BackendError(fmt::format("{}/v1/classify: malformed response: {}", endpoint_, e.what()));
  }
}

std::unique_ptr<Classifier> make_classifier(const BackendDescriptor& backend) {
  switch (backend.kind) {
    case BackendKind::kMock:
      if (!backend.model_id.empty() && backend.model_id != kMockModelId) {
        throw InputError(fmt::format("mock backend model id is \"{}\"", kMockModelId));
      }
      return std::make_unique<MockClassifier>();
    case BackendKind::kRemote:
      if (!backend.endpoint || backend.endpoint->empty()) {
        throw InputError("remote backend requires an endpoint");
      }
      return std::make_unique<RemoteClassifier>(*backend.endpoint, backend.model_id,
                                                backend.timeout);
  }
  throw InputError("unknown backend kind");
}

EntailmentDistribution classify_pair(std::string_view premise, std::string_view hypothesis,
                                     Classifier& classifier) {
  const PairRequest request{"p1", std::string(premise), std::string(hypothesis)};
  return classify_batch(std::span(&request, 1), classifier, {1, 1}).front();
}

std::vector<EntailmentDistribution> classify_batch(std::span<const PairRequest> pairs,
                                                   Classifier& classifier,
                                                   const BatchOptions& options) {
  check_requests(pairs);
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  const std::size_t chunks = (pairs.size() + batch_size - 1) / batch_size;

  std::vector<EntailmentDistribution> results(pairs.size());
  std::vector<std::string> errors(chunks);

  auto run_chunk = [&](std::size_t c) {
    const std::size_t begin = c * batch_size;
    const auto chunk = pairs.subspan(begin, std::min(batch_size, pairs.size() - begin));
    try {
      auto out = classifier.classify(chunk);
      if (out.size() != chunk.size()) {
        throw BackendError(fmt::format("backend returned {} results for {} pairs", out.size(),
                                       chunk.size()));
      }
      for (std::size_t i = 0; i < out.size(); ++i) {
        check_result(out[i], chunk[i].id);
        results[begin + i] = out[i];
      }
    } catch (const BackendError& e) {
      errors[c] = e.what();
    } catch (const InputError& e) {
      errors[c] = e.what();
    }
  };

  const std::size_t workers = std::min(std::max<std::size_t>(1, options.concurrency), chunks);
  if (workers == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
      });
    }
  }

  std::vector<std::string> failed;
  std::string first_error;
  for (std::size_t c = 0; c < chunks; ++c) {
    if (errors[c].empty()) continue;
    if (first_error.empty()) first_error = errors[c];
    const std::size_t begin = c * batch_size;
    const std::size_t end = std::min(begin + batch_size, pairs.size());
    for (std::size_t i = begin; i < end; ++i) failed.push_back(pairs[i].id);
  }
  if (!failed.empty()) throw BatchError(first_error, std::move(failed));
  return results;
}

Cache::Cache(std::filesystem::path path, std::string model_id)
    : path_(std::move(path)), model_id_(std::move(model_id)) {
  load();
  writer_.open(path_, std::ios::app | std::ios::binary);
  if (writer_) {
    persistent_ = true;
  } else {
    spdlog::warn("nli cache: cannot open {} for writing; continuing without persistence",
                 path_.string());
  }
}

Cache::Cache(std::string model_id) : model_id_(std::move(model_id)) {}

void Cache::load() {
  std::error_code ec;
  if (!std::filesystem::exists(path_, ec)) return;
  std::ifstream in(path_, std::ios::binary);
  if (!in) {
    spdlog::warn("nli cache: cannot read {}; starting empty", path_.string());
    return;
  }
  std::string line;
  std::size_t line_no = 0;
  std::size_t skipped = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto rec = json::parse(line);
      if (rec.at("model_id").get<std::string>() != model_id_) continue;
      auto d = parse_distribution(rec);
      if (!is_valid(d)) {
        ++skipped;
        continue;
      }
      entries_.insert_or_assign(
          std::make_pair(rec.at("premise").get<std::string>(), rec.at("hypothesis").get<std::string>()),
          d);
    } catch (const json::exception&) {
      ++skipped;
    }
  }
  if (skipped > 0) {
    spdlog::warn("nli cache: skipped {} unreadable record(s) in {}", skipped, path_.string());
  }
}

std::optional<EntailmentDistribution> Cache::lookup(std::string_view premise,
                                                    std::string_view hypothesis) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(std::make_pair(std::string(premise), std::string(hypothesis)));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void Cache::store(std::string_view premise, std::string_view hypothesis,
                  const EntailmentDistribution& d) {
  std::lock_guard lock(mutex_);
  entries_.insert_or_assign(std::make_pair(std::string(premise), std::string(hypothesis)), d);
  if (!persistent_) return;
  ordered_json rec;
  rec["model_id"] = model_id_;
  rec["premise"] = premise;
  rec["hypothesis"] = hypothesis;
  rec["contradiction"] = d.contradiction;
  rec["entailment"] = d.entailment;
  rec["neutral"] = d.neutral;
  writer_ << rec.dump() << '\n';
  writer_.flush();
  if (!writer_) {
    spdlog::warn("nli cache: write to {} failed; continuing without persistence", path_.string());
    persistent_ = false;
  }
}

std::size_t Cache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

bool Cache::persistent() const {
  std::lock_guard lock(mutex_);
  return persistent_;
}

EntailmentDistribution cached_classify(std::string_view premise, std::string_view hypothesis,
                                       Classifier& classifier, Cache& cache) {
  const PairRequest request{"p1", std::string(premise), std::string(hypothesis)};
  return cached_classify_batch(std::span(&request, 1), classifier, &cache, {1, 1}).front();
}

std::vector<EntailmentDistribution> cached_classify_batch(std::span<const PairRequest> pairs,
                                                          Classifier& classifier, Cache* cache,
                                                          const BatchOptions& options) {
  if (cache == nullptr) return classify_batch(pairs, classifier, options);
  check_requests(pairs);
  if (const auto id = classifier.model_id(); id != cache->model_id()) {
    throw InputError(fmt::format("cache was opened for model \"{}\" but backend is \"{}\"",
                                 cache->model_id(), id));
  }

  std::vector<EntailmentDistribution> results(pairs.size());
  std::vector<PairRequest> misses;
  std::vector<std::size_t> miss_index;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (auto hit = cache->lookup(pairs[i].premise, pairs[i].hypothesis)) {
      results[i] = *hit;
    } else {
      misses.push_back(pairs[i]);
      miss_index.push_back(i);
    }
  }
  if (misses.empty()) return results;

  const auto fresh = classify_batch(misses, classifier, options);
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    results[miss_index[k]] = fresh[k];
    cache->store(misses[k].premise, misses[k].hypothesis, fresh[k]);
  }
  return results;
}

}  // namespace bident::nli
