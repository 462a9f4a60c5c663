#include "bident/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "bident/baselines.hpp"
#include "bident/corpus.hpp"
#include "bident/metric.hpp"
#include "bident/nli.hpp"
#include "bident/scores.hpp"
#include "bident/stats.hpp"

namespace bident::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::string_view kVersion = "0.1.0";
constexpr const char* kEndpointEnv = "BIDENT_NLI_ENDPOINT";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw InputError(fmt::format("cannot write {}", path.string()));
}

void prepare_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw InputError(fmt::format("cannot create output directory {}", dir.string()));
  }
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw InputError("sha256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

// Collects manifest entries; files are written in the order they are added.
class RunManifest {
 public:
  explicit RunManifest(std::string command) { doc_["command"] = std::move(command); }

  ordered_json& config() { return doc_["config"]; }
  void set_backend(ordered_json backend) { doc_["backend"] = std::move(backend); }

  void add_input(const std::string& path, std::string_view content) {
    inputs_.push_back(ordered_json{{"path", path}, {"sha256", sha256_hex(content)}});
  }

  void add_output(const fs::path& dir, const std::string& name, std::string content) {
    outputs_.push_back(ordered_json{{"path", name}, {"sha256", sha256_hex(content)}});
    files_.emplace_back(dir / name, std::move(content));
  }

  void write(const fs::path& dir) {
    for (const auto& [path, content] : files_) write_file(path, content);
    ordered_json doc;
    doc["tool"] = "bident";
    doc["version"] = kVersion;
    for (auto& [k, v] : doc_.items()) doc[k] = v;
    doc["inputs"] = inputs_;
    doc["outputs"] = outputs_;
    write_file(dir / "run.json", doc.dump(2) + "\n");
  }

 private:
  ordered_json doc_;
  ordered_json inputs_ = ordered_json::array();
  ordered_json outputs_ = ordered_json::array();
  std::vector<std::pair<fs::path, std::string>> files_;
};

// Parses every data file and merges systems of the same language pair.
std::vector<corpus::EvaluationSet> load_corpus(const std::vector<std::string>& paths,
                                               RunManifest& manifest) {
  std::vector<corpus::EvaluationSet> merged;
  for (const auto& path : paths) {
    const auto content = read_file(path);
    manifest.add_input(path, content);
    std::istringstream in(content);
    std::vector<corpus::EvaluationSet> sets;
    try {
      sets = corpus::parse_corpus(in);
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}: {}", path, e.what()));
    }
    for (auto& set : sets) {
      auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& m) {
        return m.language_pair == set.language_pair;
      });
      if (it == merged.end()) {
        merged.push_back(std::move(set));
      } else {
        for (auto& sys : set.systems) it->systems.push_back(std::move(sys));
      }
    }
  }
  for (const auto& set : merged) {
    for (const auto& issue : corpus::validate(set)) {
      if (issue.severity == corpus::Severity::kError) {
        throw InputError(fmt::format("{}: {}", issue.location, issue.message));
      }
    }
  }
  return merged;
}

struct BackendFlags {
  std::string kind = "mock";
  std::string endpoint;
  std::string model_id;
  long timeout_ms = 30000;
};

void add_backend_flags(CLI::App* cmd, BackendFlags& flags) {
  cmd->add_option("--backend", flags.kind, "Classifier backend")
      ->check(CLI::IsMember({"mock", "remote"}));
  cmd->add_option("--endpoint", flags.endpoint,
                  fmt::format("Inference server URL (falls back to ${})", kEndpointEnv));
  cmd->add_option("--model-id", flags.model_id, "Expected model id");
  cmd->add_option("--timeout-ms", flags.timeout_ms, "Transport timeout")
      ->check(CLI::PositiveNumber);
}

nli::BackendDescriptor to_descriptor(const BackendFlags& flags) {
  nli::BackendDescriptor d;
  d.kind = flags.kind == "remote" ? nli::BackendKind::kRemote : nli::BackendKind::kMock;
  d.model_id = flags.model_id;
  d.timeout = std::chrono::milliseconds(flags.timeout_ms);
  if (d.kind == nli::BackendKind::kRemote) {
    if (!flags.endpoint.empty()) {
      d.endpoint = flags.endpoint;
    } else if (const char* env = std::getenv(kEndpointEnv); env != nullptr && *env != '\0') {
      d.endpoint = std::string(env);
    } else {
      throw InputError(fmt::format("remote backend needs --endpoint or ${}", kEndpointEnv));
    }
  }
  return d;
}

ordered_json describe_backend(const nli::BackendDescriptor& d, const std::string& model_id) {
  ordered_json j;
  j["kind"] = d.kind == nli::BackendKind::kRemote ? "remote" : "mock";
  j["endpoint"] = d.endpoint ? ordered_json(*d.endpoint) : ordered_json(nullptr);
  j["model_id"] = model_id;
  return j;
}

// --- score -----------------------------------------------------------------

struct ScoreArgs {
  std::vector<std::string> data;
  BackendFlags backend;
  std::string norm = "none";
  std::string out;
  std::size_t concurrency = 4;
  std::size_t batch_size = 32;
  std::string cache;
  std::string config;
};

template <typename T>
void apply_config(const json& cfg, const char* key, CLI::App* cmd, const char* flag, T& target) {
  if (!cfg.contains(key) || cmd->count(flag) > 0) return;
  try {
    target = cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(fmt::format("config key \"{}\": {}", key, e.what()));
  }
}

void apply_score_config(ScoreArgs& a, CLI::App* cmd) {
  if (a.config.empty()) return;
  json cfg;
  try {
    cfg = json::parse(read_file(a.config));
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("{}: {}", a.config, e.what()));
  }
  if (!cfg.is_object()) throw InputError(fmt::format("{}: config must be a JSON object", a.config));
  apply_config(cfg, "backend", cmd, "--backend", a.backend.kind);
  apply_config(cfg, "endpoint", cmd, "--endpoint", a.backend.endpoint);
  apply_config(cfg, "model_id", cmd, "--model-id", a.backend.model_id);
  apply_config(cfg, "timeout_ms", cmd, "--timeout-ms", a.backend.timeout_ms);
  apply_config(cfg, "norm", cmd, "--norm", a.norm);
  apply_config(cfg, "concurrency", cmd, "--concurrency", a.concurrency);
  apply_config(cfg, "batch_size", cmd, "--batch-size", a.batch_size);
  apply_config(cfg, "cache", cmd, "--cache", a.cache);
  if (a.backend.kind != "mock" && a.backend.kind != "remote") {
    throw InputError(fmt::format("unknown backend \"{}\"", a.backend.kind));
  }
}

int cmd_score(ScoreArgs& a, CLI::App* cmd, std::ostream& out) {
  apply_score_config(a, cmd);
  const auto mode = metric::parse_normalization(a.norm);
  if (!mode) throw InputError(fmt::format("unknown normalization mode \"{}\"", a.norm));
  if (a.concurrency == 0 || a.batch_size == 0) {
    throw InputError("--concurrency and --batch-size must be positive");
  }

  RunManifest manifest("score");
  const auto sets = load_corpus(a.data, manifest);
  const auto descriptor = to_descriptor(a.backend);
  auto classifier = nli::make_classifier(descriptor);
  const auto model_id = classifier->model_id();

  std::unique_ptr<nli::Cache> cache;
  if (!a.cache.empty()) cache = std::make_unique<nli::Cache>(a.cache, model_id);

  metric::ScoringOptions options;
  options.normalization = *mode;
  options.batch = {a.batch_size, a.concurrency};
  options.cache = cache.get();

  std::string segments;
  std::vector<SystemScore> systems;
  for (const auto& set : sets) {
    const auto run = metric::score_systems(set, *classifier, options);
    segments += metric::segment_scores_to_jsonl(run);
    systems.insert(systems.end(), run.systems.begin(), run.systems.end());
  }

  // Scheduling knobs (concurrency, batch size) do not affect results and
  // are left out so manifests compare equal across them.
  manifest.config()["metric"] = metric::kMetricName;
  manifest.config()["norm"] = metric::to_string(*mode);
  manifest.config()["cache"] = !a.cache.empty();
  manifest.set_backend(describe_backend(descriptor, model_id));

  const fs::path dir(a.out);
  prepare_output_dir(dir);
  manifest.add_output(dir, "segments.bident.jsonl", std::move(segments));
  manifest.add_output(dir, "system_scores.bident.jsonl", system_scores_to_jsonl(systems));
  manifest.write(dir);
  out << fmt::format("scored {} system(s) across {} language pair(s) into {}\n", systems.size(),
                     sets.size(), dir.string());
  return kExitOk;
}

// --- baseline --------------------------------------------------------------

struct BaselineArgs {
  std::vector<std::string> data;
  std::string metrics;
  std::string out;
};

int cmd_baseline(const BaselineArgs& a, std::ostream& out) {
  std::vector<baselines::Metric> metrics;
  for (const auto& name : split_list(a.metrics)) {
    const auto m = baselines::parse_metric(name);
    if (!m) throw InputError(fmt::format("unsupported metric \"{}\"", name));
    if (std::find(metrics.begin(), metrics.end(), *m) == metrics.end()) metrics.push_back(*m);
  }
  if (metrics.empty()) throw InputError("no metrics requested");

  RunManifest manifest("baseline");
  const auto sets = load_corpus(a.data, manifest);
  const fs::path dir(a.out);
  prepare_output_dir(dir);

  ordered_json names = ordered_json::array();
  for (auto m : metrics) {
    std::vector<SystemScore> scores;
    for (const auto& set : sets) {
      auto s = baselines::baseline_system_score(set, m);
      scores.insert(scores.end(), s.begin(), s.end());
    }
    names.push_back(baselines::to_string(m));
    manifest.add_output(dir, fmt::format("system_scores.{}.jsonl", baselines::to_string(m)),
                        system_scores_to_jsonl(scores));
  }
  manifest.config()["metrics"] = names;
  manifest.config()["tokenization"] = "lowercase+whitespace";
  manifest.config()["ter"] = "greedy-shift approximation";
  manifest.write(dir);
  out << fmt::format("wrote {} baseline metric(s) into {}\n", metrics.size(), dir.string());
  return kExitOk;
}

// --- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::vector<std::string> scores;
  std::string human;
  std::string metrics;
  std::string compare;
  double alpha = 0.01;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  RunManifest manifest("evaluate");

  // lang pair -> metric -> scores
  std::map<std::string, std::map<std::string, std::vector<SystemScore>>> by_pair;
  for (const auto& path : a.scores) {
    const auto content = read_file(path);
    manifest.add_input(path, content);
    std::istringstream in(content);
    std::vector<SystemScore> parsed;
    try {
      parsed = parse_system_scores(in);
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}: {}", path, e.what()));
    }
    for (auto& s : parsed) {
      auto& list = by_pair[s.language_pair][s.metric];
      if (std::any_of(list.begin(), list.end(),
                      [&](const SystemScore& o) { return o.system_name == s.system_name; })) {
        throw InputError(fmt::format("{}: duplicate {} score for {}/{}", path, s.metric,
                                     s.language_pair, s.system_name));
      }
      list.push_back(std::move(s));
    }
  }
  if (by_pair.empty()) throw InputError("no system scores given");

  const auto human_content = read_file(a.human);
  manifest.add_input(a.human, human_content);
  std::istringstream human_in(human_content);
  std::vector<corpus::HumanScore> human;
  try {
    human = corpus::parse_human_scores(human_in);
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", a.human, e.what()));
  }

  const auto requested = split_list(a.metrics);
  std::set<std::string> negated;
  std::vector<stats::CorrelationReport> reports;
  for (auto& [lp, metrics] : by_pair) {
    std::map<std::string, std::vector<SystemScore>> selected;
    if (requested.empty()) {
      selected = metrics;
    } else {
      for (const auto& m : requested) {
        const auto it = metrics.find(m);
        if (it == metrics.end()) {
          throw InputError(fmt::format("{}: no scores for requested metric \"{}\"", lp, m));
        }
        selected.emplace(m, it->second);
      }
    }
    for (const auto& [m, unused] : selected) {
      if (baselines::lower_is_better(m)) negated.insert(m);
    }

    std::vector<stats::HumanJudgment> judgments;
    for (const auto& h : human) {
      if (h.language_pair == lp) judgments.push_back({h.system_name, h.score});
    }
    reports.push_back(stats::build_report(selected, judgments, lp, negated));
  }

  ordered_json doc;
  doc["reports"] = ordered_json::array();
  for (const auto& r : reports) doc["reports"].push_back(stats::to_json(r));
  doc["negated_metrics"] = negated;

  std::string table = stats::format_table(reports);
  if (!a.compare.empty()) {
    const auto pair = split_list(a.compare);
    if (pair.size() != 2) throw InputError("--compare expects two metric names: A,B");
    std::vector<double> first;
    std::vector<double> second;
    for (const auto& r : reports) {
      auto find = [&](const std::string& m) {
        const auto it = std::find_if(r.rows.begin(), r.rows.end(),
                                     [&](const auto& row) { return row.metric == m; });
        if (it == r.rows.end()) {
          throw InputError(fmt::format("{}: metric \"{}\" missing for --compare", r.language_pair, m));
        }
        return it->pearson;
      };
      first.push_back(find(pair[0]));
      second.push_back(find(pair[1]));
    }
    const auto t = stats::paired_t_test(first, second, stats::Alternative::kGreater, a.alpha);
    ordered_json cmp;
    cmp["metric"] = pair[0];
    cmp["baseline"] = pair[1];
    cmp["paired_over"] = "per-language-pair pearson";
    cmp["test"] = stats::to_json(t);
    doc["comparison"] = cmp;
    table += fmt::format("\n{} > {} (one-tailed paired t-test over {} language pairs): t = {:.4f}, "
                         "df = {}, p = {:.6f}, alpha = {}, {}\n",
                         pair[0], pair[1], first.size(), t.t, t.df, t.p_one_tailed, t.alpha,
                         t.significant ? "significant" : "not significant");
  } else {
    doc["comparison"] = nullptr;
  }

  manifest.config()["metrics"] = requested;
  manifest.config()["compare"] = a.compare;
  manifest.config()["alpha"] = a.alpha;

  const fs::path dir(a.out);
  prepare_output_dir(dir);
  manifest.add_output(dir, "report.json", doc.dump(2) + "\n");
  manifest.add_output(dir, "report.txt", table);
  manifest.write(dir);
  out << table;
  return kExitOk;
}

// --- convert ---------------------------------------------------------------

struct ConvertArgs {
  std::string candidates;
  std::string references;
  std::string system;
  std::string lang_pair;
  std::string out;
};

int cmd_convert(const ConvertArgs& a, std::ostream& out) {
  if (a.system.find('/') != std::string::npos) {
    throw InputError("system name may not contain '/'");
  }
  RunManifest manifest("convert");
  const auto cands = read_file(a.candidates);
  const auto refs = read_file(a.references);
  manifest.add_input(a.candidates, cands);
  manifest.add_input(a.references, refs);
  std::istringstream cand_in(cands);
  std::istringstream ref_in(refs);
  auto jsonl = corpus::convert_plain_text(cand_in, ref_in, a.system, a.lang_pair);

  manifest.config()["system"] = a.system;
  manifest.config()["lang_pair"] = a.lang_pair;
  const fs::path dir(a.out);
  prepare_output_dir(dir);
  const auto name = fmt::format("{}.{}.jsonl", a.system, a.lang_pair);
  manifest.add_output(dir, name, std::move(jsonl));
  manifest.write(dir);
  out << fmt::format("wrote {}\n", (dir / name).string());
  return kExitOk;
}

// --- nli ping --------------------------------------------------------------

int cmd_ping(const BackendFlags& flags, std::ostream& out) {
  const auto descriptor = to_descriptor(flags);
  auto classifier = nli::make_classifier(descriptor);
  const auto model_id = classifier->health();
  const auto d = nli::classify_pair("A man is sleeping.", "A person is asleep.", *classifier);
  out << fmt::format("model_id: {}\n", model_id);
  out << fmt::format("classify: contradiction={} entailment={} neutral={}\n", d.contradiction,
                     d.entailment, d.neutral);
  return kExitOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bidirectional-entailment MT evaluation toolkit", "bident"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score systems with the entailment metric");
  score_cmd->add_option("--data", score.data, "Canonical JSONL corpus file(s)")
      ->required()
      ->check(CLI::ExistingFile);
  add_backend_flags(score_cmd, score.backend);
  score_cmd->add_option("--norm", score.norm, "Normalization: none, max, mean, minmax");
  score_cmd->add_option("--out", score.out, "Output directory")->required();
  score_cmd->add_option("--concurrency", score.concurrency, "Max in-flight backend batches");
  score_cmd->add_option("--batch-size", score.batch_size, "Pairs per backend request");
  score_cmd->add_option("--cache", score.cache, "Classification cache file (JSONL)");
  score_cmd->add_option("--config", score.config, "JSON file overriding defaults")
      ->check(CLI::ExistingFile);

  BaselineArgs baseline;
  auto* baseline_cmd = app.add_subcommand("baseline", "Compute BLEU/WER/PER/TER system scores");
  baseline_cmd->add_option("--data", baseline.data, "Canonical JSONL corpus file(s)")
      ->required()
      ->check(CLI::ExistingFile);
  baseline_cmd->add_option("--metrics", baseline.metrics, "Comma list of bleu,wer,per,ter")
      ->required();
  baseline_cmd->add_option("--out", baseline.out, "Output directory")->required();

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Correlate system scores with human scores");
  evaluate_cmd->add_option("--scores", evaluate.scores, "System score JSONL file(s)")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--human", evaluate.human, "Human score sidecar JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--metrics", evaluate.metrics, "Comma list restricting metrics");
  evaluate_cmd->add_option("--compare", evaluate.compare,
                           "A,B: one-tailed paired t-test of A over B across language pairs");
  evaluate_cmd->add_option("--alpha", evaluate.alpha, "Significance level")
      ->check(CLI::Range(0.0, 1.0));
  evaluate_cmd->add_option("--out", evaluate.out, "Output directory")->required();

  ConvertArgs convert;
  auto* convert_cmd = app.add_subcommand("convert", "Pair plain-text files into canonical JSONL");
  convert_cmd->add_option("--candidates", convert.candidates, "One candidate per line")
      ->required()
      ->check(CLI::ExistingFile);
  convert_cmd->add_option("--references", convert.references, "One reference per line")
      ->required()
      ->check(CLI::ExistingFile);
  convert_cmd->add_option("--system", convert.system, "System name")->required();
  convert_cmd->add_option("--lang-pair", convert.lang_pair, "Language pair, e.g. de-en")
      ->required();
  convert_cmd->add_option("--out", convert.out, "Output directory")->required();

  BackendFlags ping;
  auto* nli_cmd = app.add_subcommand("nli", "Classifier backend utilities");
  nli_cmd->require_subcommand(1);
  auto* ping_cmd = nli_cmd->add_subcommand("ping", "Check health and one classify round-trip");
  add_backend_flags(ping_cmd, ping);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e, out, err);
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (*score_cmd) return cmd_score(score, score_cmd, out);
    if (*baseline_cmd) return cmd_baseline(baseline, out);
    if (*evaluate_cmd) return cmd_evaluate(evaluate, out);
    if (*convert_cmd) return cmd_convert(convert, out);
    if (*ping_cmd) return cmd_ping(ping, out);
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  err << "error: no command\n";
  return kExitInput;
}

}  // namespace bident::cli
