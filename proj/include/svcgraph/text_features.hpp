// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace svcgraph {

using TokenList = std::vector<std::string>;

// Lowercase, split on non-alphanumerics, map pure-digit tokens to "num",
// drop remaining tokens shorter than two characters.
TokenList tokenize(std::string_view message);

class TfidfVocab {
 public:
  TfidfVocab() = default;
  TfidfVocab(std::vector<std::string> tokens, std::vector<std::size_t> doc_freq, std::size_t n_docs);

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::size_t>& doc_freq() const { return doc_freq_; }
  std::size_t n_docs() const { return n_docs_; }
  std::size_t size() const { return tokens_.size(); }
  bool fitted() const { return n_docs_ > 0; }
  // Position of `token`, or size() when absent.
  std::size_t find(const std::string& token) const;
  // ln((1 + n_docs) / (1 + df)) + 1
  double idf(std::size_t i) const;

  nlohmann::json to_json() const;
  static TfidfVocab from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> doc_freq_;
  std::size_t n_docs_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

struct VocabFit {
  TfidfVocab vocab;
  // Set when fewer than log_dim distinct tokens were available.
  bool short_vocabulary = false;
};

// Keeps the log_dim tokens with highest document frequency, ties broken by
// ascending token. Throws ContractViolation for an empty corpus.
VocabFit fit_vocab(std::span<const TokenList> documents, std::size_t log_dim);

// Raw-count tf times smoothed idf, L2-normalised. Width is vocab.size().
std::vector<double> transform(std::span<const std::string> document, const TfidfVocab& vocab);

}  // namespace svcgraph
