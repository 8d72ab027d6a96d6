// Copyright 2026 The healthtext Authors.
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

#pragma once

// Synthetic "Neither"-class data: render a press-release prompt, request
// completions from a chat-completion style HTTP endpoint, filter candidates
// for novelty, label purity and length, then append the survivors to the
// training split.
//
// Wire format (POST endpoint_url):
//   request  {"model": str, "temperature": float,
//             "messages": [{"role": "system"|"user", "content": str}]}
//   response {"choices": [{"message": {"content": str}}]}
//   header   Authorization: Bearer <value of $auth_env_var>

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdlib>
#include <future>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "healthtext/corpus_types.hpp"
#include "healthtext/error.hpp"
#include "healthtext/provenance.hpp"
#include "healthtext/textprep.hpp"

namespace healthtext::augment {

using nlohmann::json;

struct PromptTemplate {
  std::string persona;
  // "{min_words}" and "{max_words}" are replaced from length_range.
  std::string task_instruction;
  std::vector<std::string> constraints;
  std::pair<int, int> length_range{250, 300};
  std::vector<std::string> topic_rotation;
};

inline PromptTemplate default_template() {
  PromptTemplate t;
  t.persona = "You are an FDA press release writer.";
  t.task_instruction =
      "Your task is to write a formal, FDA-style press release ({min_words}–{max_words} "
      "words) announcing an update related to food labeling or packaging.";
  t.constraints = {
      "Do NOT discuss food recalls, disease outbreaks, or safety incidents.",
      "Do NOT include contact information, phone numbers, emails, or links.",
      "Ensure each press release is unique—avoid duplicating previous wording, "
      "structure, or content.",
      "Maintain a professional, public-health tone.",
      "Vary the focus slightly each time (e.g., nutrition facts, allergen labeling, "
      "ingredient transparency, packaging design updates).",
  };
  t.length_range = {250, 300};
  t.topic_rotation = {"nutrition facts", "allergen labeling", "ingredient transparency",
                      "packaging design updates"};
  return t;
}

namespace detail {

inline void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace detail

inline std::string build_prompt(const PromptTemplate& t, std::size_t rotation_index) {
  if (t.topic_rotation.empty()) throw ConfigError("prompt template has no topics to rotate");
  if (t.constraints.empty()) throw ConfigError("prompt template has no constraints");
  if (t.length_range.first > t.length_range.second) {
    throw ConfigError("prompt length range is reversed");
  }
  std::string instruction = t.task_instruction;
  detail::replace_all(instruction, "{min_words}", std::to_string(t.length_range.first));
  detail::replace_all(instruction, "{max_words}", std::to_string(t.length_range.second));
  std::string out = t.persona + " " + instruction + "\n\nInstructions:\n";
  for (const auto& c : t.constraints) out += "- " + c + "\n";
  out += "\nFocus for this release: " + t.topic_rotation[rotation_index % t.topic_rotation.size()] +
         ".";
  return out;
}

inline json to_json(const PromptTemplate& t) {
  return {{"persona", t.persona},
          {"task_instruction", t.task_instruction},
          {"constraints", t.constraints},
          {"length_range", {t.length_range.first, t.length_range.second}},
          {"topic_rotation", t.topic_rotation}};
}

inline PromptTemplate template_from_json(const json& j) {
  PromptTemplate t = default_template();
  t.persona = j.value("persona", t.persona);
  t.task_instruction = j.value("task_instruction", t.task_instruction);
  if (j.contains("constraints")) t.constraints = j["constraints"].get<std::vector<std::string>>();
  if (j.contains("length_range")) {
    const auto r = j["length_range"].get<std::vector<int>>();
    if (r.size() != 2) throw ConfigError("length_range needs two integers");
    t.length_range = {r[0], r[1]};
  }
  if (j.contains("topic_rotation")) {
    t.topic_rotation = j["topic_rotation"].get<std::vector<std::string>>();
  }
  return t;
}

// ---------------------------------------------------------------------------
// Generation client

struct GenerationClientConfig {
  std::string endpoint_url;
  std::string auth_env_var = "HEALTHTEXT_GEN_API_KEY";
  std::string model_name = "gpt-4";
  double temperature = 0.9;
  int max_retries = 3;
  double timeout_seconds = 60.0;
  int backoff_initial_ms = 500;  // doubled after every failed attempt
  std::optional<std::string> system_message;

  void check() const {
    if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (endpoint_url.empty()) throw ConfigError("endpoint_url is required");
    if (auth_env_var.empty()) throw ConfigError("auth_env_var is required");
  }
};

inline GenerationClientConfig client_config_from_json(const json& j) {
  GenerationClientConfig c;
  c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
  c.auth_env_var = j.value("auth_env_var", c.auth_env_var);
  c.model_name = j.value("model_name", c.model_name);
  c.temperature = j.value("temperature", c.temperature);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  c.backoff_initial_ms = j.value("backoff_initial_ms", c.backoff_initial_ms);
  if (j.contains("system_message") && j["system_message"].is_string()) {
    c.system_message = j["system_message"].get<std::string>();
  }
  return c;
}

// The response arrived but did not have the expected shape.
class GenerationParseError : public Error {
 public:
  using Error::Error;
};

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline Endpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint_url needs a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("unsupported endpoint scheme '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string request_body(const GenerationClientConfig& cfg, const std::string& prompt) {
  json messages = json::array();
  if (cfg.system_message) messages.push_back({{"role", "system"}, {"content", *cfg.system_message}});
  messages.push_back({{"role", "user"}, {"content", prompt}});
  return json{{"model", cfg.model_name}, {"temperature", cfg.temperature}, {"messages", messages}}
      .dump();
}

inline std::string parse_completion(const std::string& body) {
  try {
    const auto j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw GenerationParseError(std::string("unexpected completion body: ") + e.what());
  }
}

inline std::string excerpt(const std::string& s, std::size_t n = 200) {
  return s.size() <= n ? s : s.substr(0, n) + "...";
}

// Retries connection failures, 429 and 5xx with exponential backoff; any
// other non-200 status fails immediately. The auth variable is checked before
// any request is made.
inline std::string request_generation(const GenerationClientConfig& cfg, const std::string& prompt) {
  cfg.check();
  const char* key = std::getenv(cfg.auth_env_var.c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError("environment variable " + cfg.auth_env_var + " is not set");
  }
  const Endpoint ep = parse_endpoint(cfg.endpoint_url);
  httplib::Client client(ep.origin);
  const auto timeout = std::chrono::duration<double>(cfg.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
  const std::string body = request_body(cfg, prompt);

  std::string last_error;
  int delay_ms = cfg.backoff_initial_ms;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0 && delay_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms *= 2;
    }
    auto res = client.Post(ep.path, headers, body, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return parse_completion(res->body);
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
      continue;
    }
    throw HttpError("HTTP " + std::to_string(res->status) + ": " + excerpt(res->body),
                    res->status);
  }
  throw HttpError("generation failed after " + std::to_string(cfg.max_retries + 1) +
                  " attempts; last error: " + last_error);
}

struct Candidate {
  std::size_t index = 0;
  std::string prompt_hash;
  std::string text;
  bool parse_failed = false;
};

struct GenerationRun {
  std::vector<Candidate> candidates;  // in request order
  std::optional<std::string> error;   // set when a request failed for good
};

// Issues `count` requests, at most `in_flight` at a time, rotating topics
// from `first_index`. Stops at the first batch containing a hard failure and
// keeps everything gathered before it.
inline GenerationRun generate_candidates(const GenerationClientConfig& cfg,
                                         const PromptTemplate& tpl, std::size_t count,
                                         std::size_t in_flight, std::size_t first_index = 0) {
  cfg.check();
  const char* key = std::getenv(cfg.auth_env_var.c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError("environment variable " + cfg.auth_env_var + " is not set");
  }
  in_flight = std::max<std::size_t>(in_flight, 1);
  GenerationRun run;
  for (std::size_t begin = 0; begin < count && !run.error; begin += in_flight) {
    const std::size_t end = std::min(count, begin + in_flight);
    std::vector<std::future<Candidate>> jobs;
    for (std::size_t i = begin; i < end; ++i) {
      const std::string prompt = build_prompt(tpl, first_index + i);
      jobs.push_back(std::async(std::launch::async, [&cfg, prompt, i] {
        Candidate c;
        c.index = i;
        c.prompt_hash = sha256_hex(prompt);
        try {
          c.text = request_generation(cfg, prompt);
        } catch (const GenerationParseError&) {
          c.parse_failed = true;
        }
        return c;
      }));
    }
    for (auto& job : jobs) {
      try {
        run.candidates.push_back(job.get());
      } catch (const Error& e) {
        if (!run.error) run.error = e.what();
      }
    }
  }
  return run;
}

// ---------------------------------------------------------------------------
// Filtering

enum class RejectionReason { kDuplicate, kForbiddenKeyword, kLength, kParseError };

inline std::string_view to_string(RejectionReason r) {
  switch (r) {
    case RejectionReason::kDuplicate: return "duplicate";
    case RejectionReason::kForbiddenKeyword: return "forbidden_keyword";
    case RejectionReason::kLength: return "length";
    case RejectionReason::kParseError: return "parse_error";
  }
  return "unknown";
}

struct AugmentationRecord {
  std::string text;
  SentenceLabel label = SentenceLabel::kNeither;
  std::string prompt_hash;
  bool accepted = false;
  std::optional<RejectionReason> rejection_reason;
};

inline json to_json(const AugmentationRecord& r) {
  return {{"text", r.text},
          {"label", std::string(healthtext::to_string(r.label))},
          {"prompt_hash", r.prompt_hash},
          {"accepted", r.accepted},
          {"rejection_reason", r.rejection_reason ? json(std::string(to_string(*r.rejection_reason)))
                                                  : json(nullptr)}};
}

struct FilterConfig {
  std::vector<std::string> forbidden_keywords = {"recall", "outbreak"};
  std::size_t min_words = 200;
  std::size_t max_words = 350;
  double jaccard_threshold = 0.5;
  std::size_t shingle_size = 5;
};

inline FilterConfig filter_config_from_json(const json& j) {
  FilterConfig c;
  if (j.contains("forbidden_keywords")) {
    c.forbidden_keywords = j["forbidden_keywords"].get<std::vector<std::string>>();
  }
  c.min_words = j.value("min_words", c.min_words);
  c.max_words = j.value("max_words", c.max_words);
  c.jaccard_threshold = j.value("jaccard_threshold", c.jaccard_threshold);
  c.shingle_size = j.value("shingle_size", c.shingle_size);
  if (c.shingle_size < 1) throw ConfigError("shingle_size must be >= 1");
  return c;
}

using ShingleSet = std::set<std::string>;

// Contiguous `size`-token shingles of the normalized text; a shorter
// non-empty text yields one shingle of all its tokens.
inline ShingleSet shingles(std::string_view text, std::size_t size) {
  const auto tokens = textprep::token_texts(textprep::tokenize(textprep::normalize(text, {})));
  ShingleSet out;
  if (tokens.empty()) return out;
  const auto n = static_cast<int>(std::min(size, tokens.size()));
  for (auto& s : textprep::ngrams(tokens, n, n)) out.insert(std::move(s));
  return out;
}

inline double jaccard(const ShingleSet& a, const ShingleSet& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& s : a) inter += b.count(s);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

inline std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char32_t c : unicode::decode(text)) {
    const bool space = unicode::is_space(c);
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

// Case-insensitive match against whole tokens and their hyphen/apostrophe/
// period-separated parts.
inline bool contains_forbidden(std::string_view text, const std::vector<std::string>& keywords) {
  std::set<std::string> lowered;
  for (const auto& k : keywords) lowered.insert(textprep::normalize(k, {}));
  for (const auto& tok : textprep::tokenize(textprep::normalize(text, {}))) {
    if (lowered.count(tok.text)) return true;
    std::string part;
    for (char ch : tok.text + "-") {
      if (ch == '-' || ch == '\'' || ch == '.') {
        if (!part.empty() && lowered.count(part)) return true;
        part.clear();
      } else {
        part.push_back(ch);
      }
    }
  }
  return false;
}

// Checks run in order: parse error, duplicate (shingle Jaccard against the
// existing texts and everything accepted so far), forbidden keyword, word
// count. Candidates are processed in the given order.
inline std::vector<AugmentationRecord> filter_generated(const std::vector<Candidate>& candidates,
                                                        const std::vector<std::string>& existing,
                                                        const FilterConfig& config = {}) {
  std::vector<ShingleSet> seen;
  seen.reserve(existing.size() + candidates.size());
  for (const auto& e : existing) seen.push_back(shingles(e, config.shingle_size));

  std::vector<AugmentationRecord> out;
  for (const auto& c : candidates) {
    AugmentationRecord r;
    r.text = c.text;
    r.prompt_hash = c.prompt_hash;
    if (c.parse_failed) {
      r.rejection_reason = RejectionReason::kParseError;
      out.push_back(std::move(r));
      continue;
    }
    const auto sh = shingles(c.text, config.shingle_size);
    const bool duplicate = std::any_of(seen.begin(), seen.end(), [&](const ShingleSet& s) {
      return jaccard(sh, s) >= config.jaccard_threshold;
    });
    const std::size_t words = word_count(c.text);
    if (duplicate) {
      r.rejection_reason = RejectionReason::kDuplicate;
    } else if (contains_forbidden(c.text, config.forbidden_keywords)) {
      r.rejection_reason = RejectionReason::kForbiddenKeyword;
    } else if (words < config.min_words || words > config.max_words) {
      r.rejection_reason = RejectionReason::kLength;
    } else {
      r.accepted = true;
      seen.push_back(sh);
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<AugmentationRecord> filter_generated(const std::vector<std::string>& texts,
                                                        const std::vector<std::string>& existing,
                                                        const FilterConfig& config = {}) {
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    candidates.push_back({i, sha256_hex(texts[i]), texts[i], false});
  }
  return filter_generated(candidates, existing, config);
}

// Returns a new corpus with one synthetic training document per record;
// every sentence of an added document is labeled Neither.
inline Corpus mix_into_corpus(const Corpus& corpus, const std::vector<AugmentationRecord>& records) {
  Corpus out = corpus;
  std::set<std::string> ids;
  for (const auto& d : corpus.documents) ids.insert(d.id);
  std::size_t counter = 0;
  for (const auto& r : records) {
    if (!r.accepted) throw ValidationError("cannot mix a rejected augmentation record");
    Document d;
    do {
      d.id = "synthetic-" + r.prompt_hash.substr(0, 12) + "-" + std::to_string(counter++);
    } while (ids.count(d.id));
    ids.insert(d.id);
    d.text = r.text;
    d.source = Source::kSynthetic;
    d.split = Split::kTrain;
    d.sentences = textprep::split_sentences(d.text, {});
    for (auto& s : d.sentences) s.doc_id = d.id;
    AnnotationSet a;
    a.doc_id = d.id;
    for (const auto& s : d.sentences) a.sentence_labels[s.index] = SentenceLabel::kNeither;
    out.documents.push_back(std::move(d));
    out.annotations.push_back(std::move(a));
  }
  return out;
}

}  // namespace healthtext::augment
