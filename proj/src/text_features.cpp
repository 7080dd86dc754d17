// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "svcgraph/text_features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <unordered_set>

#include "svcgraph/errors.hpp"

namespace svcgraph {

TokenList tokenize(std::string_view message) {
  TokenList out;
  std::string cur;
  auto flush = [&] {
    // Digit runs become "num" before the length filter, so "1" survives.
    const bool digits = !cur.empty() && std::all_of(cur.begin(), cur.end(), [](unsigned char c) {
      return std::isdigit(c) != 0;
    });
    if (digits) out.emplace_back("num");
    else if (cur.size() >= 2) out.push_back(cur);
    cur.clear();
  };
  for (unsigned char c : message) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

TfidfVocab::TfidfVocab(std::vector<std::string> tokens, std::vector<std::size_t> doc_freq,
                       std::size_t n_docs)
    : tokens_(std::move(tokens)), doc_freq_(std::move(doc_freq)), n_docs_(n_docs) {
  if (tokens_.size() != doc_freq_.size())
    throw ContractViolation("vocabulary tokens and doc_freq differ in length");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second)
      throw ContractViolation("vocabulary tokens must be unique: " + tokens_[i]);
    if (doc_freq_[i] == 0) throw ContractViolation("vocabulary token with zero document frequency");
  }
}

std::size_t TfidfVocab::find(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? tokens_.size() : it->second;
}

double TfidfVocab::idf(std::size_t i) const {
  return std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + static_cast<double>(doc_freq_[i]))) +
         1.0;
}

nlohmann::json TfidfVocab::to_json() const {
  return {{"tokens", tokens_}, {"doc_freq", doc_freq_}, {"n_docs", n_docs_}};
}

TfidfVocab TfidfVocab::from_json(const nlohmann::json& j) {
  return TfidfVocab(j.at("tokens").get<std::vector<std::string>>(),
                    j.at("doc_freq").get<std::vector<std::size_t>>(),
                    j.at("n_docs").get<std::size_t>());
}

VocabFit fit_vocab(std::span<const TokenList> documents, std::size_t log_dim) {
  if (documents.empty()) throw ContractViolation("fit_vocab needs at least one document");
  if (log_dim == 0) throw ContractViolation("log_dim must be positive");

  std::map<std::string, std::size_t> df;
  std::unordered_set<std::string_view> seen;
  for (const auto& doc : documents) {
    seen.clear();
    for (const auto& tok : doc)
      if (seen.insert(tok).second) ++df[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  // std::map iteration is already lexicographic; stable sort keeps that for ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  VocabFit fit;
  fit.short_vocabulary = ranked.size() < log_dim;
  ranked.resize(std::min(ranked.size(), log_dim));
  std::vector<std::string> tokens;
  std::vector<std::size_t> counts;
  for (auto& [tok, n] : ranked) {
    tokens.push_back(tok);
    counts.push_back(n);
  }
  fit.vocab = TfidfVocab(std::move(tokens), std::move(counts), documents.size());
  return fit;
}

std::vector<double> transform(std::span<const std::string> document, const TfidfVocab& vocab) {
  if (!vocab.fitted()) throw ContractViolation("transform called with an unfitted vocabulary");
  std::vector<double> v(vocab.size(), 0.0);
  for (const auto& tok : document) {
    const std::size_t i = vocab.find(tok);
    if (i < v.size()) v[i] += 1.0;
  }
  double norm2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] *= vocab.idf(i);
    norm2 += v[i] * v[i];
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
  }
  return v;
}

}  // namespace svcgraph
