#include "dgt/subword.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "utf8.hpp"

namespace dgt {

namespace {

constexpr std::string_view kEscapedBackslash = "\\\\";
constexpr std::string_view kEscapedMarker = "\\_";

bool starts_with_marker(std::string_view s) { return s.substr(0, kWordMarker.size()) == kWordMarker; }

std::string pair_key(std::string_view left, std::string_view right) {
  std::string k;
  k.reserve(left.size() + right.size() + 1);
  k.append(left);
  k += '\n';
  k.append(right);
  return k;
}

// Byte length of the unit starting at s[i] (escapes are two bytes).
std::size_t unit_length(std::string_view s, std::size_t i) {
  if (s[i] == '\\' && i + 1 < s.size() && (s[i + 1] == '\\' || s[i + 1] == '_')) return 2;
  return utf8::sequence_length(s, i);
}

// Splits an already-escaped symbol into units, keeping the marker on the first.
std::vector<std::string> symbol_units(std::string_view sym) {
  std::vector<std::string> out;
  std::size_t i = 0;
  std::string prefix;
  if (starts_with_marker(sym)) {
    prefix = std::string(kWordMarker);
    i = kWordMarker.size();
  }
  while (i < sym.size()) {
    const std::size_t n = unit_length(sym, i);
    out.push_back(prefix + std::string(sym.substr(i, n)));
    prefix.clear();
    i += n;
  }
  return out;
}

std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      if (s[i + 1] == '\\') {
        out += '\\';
        ++i;
        continue;
      }
      if (s[i + 1] == '_') {
        out.append(kWordMarker);
        ++i;
        continue;
      }
    }
    out += s[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> word_units(std::string_view word) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < word.size()) {
    std::string unit;
    if (word[i] == '\\') {
      unit = kEscapedBackslash;
      i += 1;
    } else if (word.substr(i, kWordMarker.size()) == kWordMarker) {
      unit = kEscapedMarker;
      i += kWordMarker.size();
    } else {
      const std::size_t n = utf8::sequence_length(word, i);
      unit = std::string(word.substr(i, n));
      i += n;
    }
    if (out.empty()) unit.insert(0, kWordMarker);
    out.push_back(std::move(unit));
  }
  return out;
}

bool is_single_unit(std::string_view sym) {
  if (starts_with_marker(sym)) sym.remove_prefix(kWordMarker.size());
  if (sym.empty()) return false;
  if (sym == kEscapedBackslash || sym == kEscapedMarker) return true;
  if (sym[0] == '\\' || starts_with_marker(sym)) return false;
  return utf8::sequence_length(sym, 0) == sym.size();
}

// ---------------------------------------------------------------------------
// Model

BpeModel::BpeModel(std::vector<Merge> merges, std::map<std::string, std::uint64_t> vocab,
                   std::uint64_t threshold)
    : merges_(std::move(merges)), vocab_(std::move(vocab)), threshold_(threshold) {
  std::unordered_set<std::string> produced;
  auto known = [&](const std::string& s) { return is_single_unit(s) || produced.count(s) > 0; };
  for (std::size_t i = 0; i < merges_.size(); ++i) {
    const Merge& m = merges_[i];
    if (!known(m.left) || !known(m.right) || starts_with_marker(m.right)) {
      throw std::invalid_argument("merge " + std::to_string(i) + " '" + m.left + " " + m.right +
                                  "' uses a symbol no earlier merge produced");
    }
    if (!rank_.emplace(pair_key(m.left, m.right), i).second) {
      throw std::invalid_argument("duplicate merge '" + m.left + " " + m.right + "'");
    }
    std::string joined = m.joined();
    producer_.emplace(joined, i);
    produced.insert(std::move(joined));
  }
}

BpeModel BpeModel::with_threshold(std::uint64_t threshold) const {
  BpeModel copy = *this;
  copy.threshold_ = threshold;
  return copy;
}

std::optional<std::size_t> BpeModel::rank(std::string_view left, std::string_view right) const {
  auto it = rank_.find(pair_key(left, right));
  if (it == rank_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t BpeModel::frequency(std::string_view symbol) const {
  auto it = vocab_.find(std::string(symbol));
  return it == vocab_.end() ? 0 : it->second;
}

const Merge* BpeModel::components(std::string_view symbol) const {
  auto it = producer_.find(std::string(symbol));
  return it == producer_.end() ? nullptr : &merges_[it->second];
}

void BpeModel::save(std::ostream& out) const {
  out << "#dgt-bpe v1 threshold=" << threshold_ << " merges=" << merges_.size()
      << " vocab=" << vocab_.size() << '\n';
  for (const auto& m : merges_) out << m.left << ' ' << m.right << '\n';
  std::vector<std::pair<std::string, std::uint64_t>> entries(vocab_.begin(), vocab_.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [sym, count] : entries) out << sym << ' ' << count << '\n';
}

BpeModel BpeModel::load(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::invalid_argument("empty subword model file");
  std::istringstream hs(header);
  std::string magic, version, f_threshold, f_merges, f_vocab;
  hs >> magic >> version >> f_threshold >> f_merges >> f_vocab;
  auto field = [&](const std::string& f, const char* name) -> std::uint64_t {
    const std::string prefix = std::string(name) + "=";
    if (f.rfind(prefix, 0) != 0) {
      throw std::invalid_argument("bad subword model header: missing " + prefix);
    }
    return std::stoull(f.substr(prefix.size()));
  };
  if (magic != "#dgt-bpe" || version != "v1") {
    throw std::invalid_argument("not a v1 subword model file");
  }
  const std::uint64_t threshold = field(f_threshold, "threshold");
  const std::uint64_t n_merges = field(f_merges, "merges");
  const std::uint64_t n_vocab = field(f_vocab, "vocab");

  auto two_fields = [&](std::uint64_t line_no) {
    std::string line;
    if (!std::getline(in, line)) {
      throw std::invalid_argument("subword model truncated at line " + std::to_string(line_no));
    }
    const auto space = line.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 >= line.size() ||
        line.find(' ', space + 1) != std::string::npos) {
      throw std::invalid_argument("malformed subword model line " + std::to_string(line_no));
    }
    return std::pair{line.substr(0, space), line.substr(space + 1)};
  };

  std::vector<Merge> merges;
  merges.reserve(n_merges);
  for (std::uint64_t i = 0; i < n_merges; ++i) {
    auto [l, r] = two_fields(i + 2);
    merges.push_back({std::move(l), std::move(r)});
  }
  std::map<std::string, std::uint64_t> vocab;
  for (std::uint64_t i = 0; i < n_vocab; ++i) {
    auto [sym, count] = two_fields(n_merges + i + 2);
    vocab[sym] = std::stoull(count);
  }
  return BpeModel(std::move(merges), std::move(vocab), threshold);
}

// ---------------------------------------------------------------------------
// Learning

namespace {

class PairLearner {
 public:
  explicit PairLearner(const std::vector<TokenSeq>& corpus) : queue_(Order{&symbols_}) {
    std::map<std::string, std::uint64_t> word_freq;  // sorted: deterministic word ids
    for (const auto& seq : corpus) {
      for (const auto& tok : seq) {
        if (!is_special_token(tok)) ++word_freq[tok];
      }
    }
    for (const auto& [word, freq] : word_freq) {
      std::vector<std::uint32_t> syms;
      for (auto& u : word_units(word)) syms.push_back(intern(u));
      words_.push_back(std::move(syms));
      freqs_.push_back(freq);
    }
    for (std::uint32_t w = 0; w < words_.size(); ++w) {
      const auto& s = words_[w];
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const auto k = key(s[i], s[i + 1]);
        update(k, static_cast<std::int64_t>(freqs_[w]));
        where_[k].push_back(w);
      }
    }
  }

  bool empty_corpus() const { return words_.empty(); }

  std::vector<Merge> learn(std::size_t n_merges, std::uint64_t min_frequency) {
    std::vector<Merge> merges;
    while (merges.size() < n_merges && !queue_.empty()) {
      const auto [count, k] = *queue_.begin();
      if (static_cast<std::uint64_t>(count) < std::max<std::uint64_t>(min_frequency, 1)) break;
      const std::uint32_t a = left(k);
      const std::uint32_t b = right(k);
      merges.push_back({symbols_[a], symbols_[b]});
      apply_merge(a, b, intern(symbols_[a] + symbols_[b]));
    }
    return merges;
  }

  std::map<std::string, std::uint64_t> vocab() const {
    std::map<std::string, std::uint64_t> out;
    for (std::size_t w = 0; w < words_.size(); ++w) {
      for (auto s : words_[w]) out[symbols_[s]] += freqs_[w];
    }
    return out;
  }

 private:
  using Key = std::uint64_t;

  // Highest count first; ties by (left, right) in byte order.
  struct Order {
    const std::vector<std::string>* symbols;
    bool operator()(const std::pair<std::int64_t, Key>& x,
                    const std::pair<std::int64_t, Key>& y) const {
      if (x.first != y.first) return x.first > y.first;
      const auto& s = *symbols;
      const int c = s[left(x.second)].compare(s[left(y.second)]);
      if (c != 0) return c < 0;
      return s[right(x.second)] < s[right(y.second)];
    }
  };

  static Key key(std::uint32_t a, std::uint32_t b) { return (Key{a} << 32) | b; }
  static std::uint32_t left(Key k) { return static_cast<std::uint32_t>(k >> 32); }
  static std::uint32_t right(Key k) { return static_cast<std::uint32_t>(k & 0xFFFFFFFFu); }

  std::uint32_t intern(const std::string& s) {
    auto [it, inserted] = ids_.emplace(s, static_cast<std::uint32_t>(symbols_.size()));
    if (inserted) symbols_.push_back(s);
    return it->second;
  }

  void update(Key k, std::int64_t delta) {
    auto it = counts_.find(k);
    std::int64_t old = 0;
    if (it != counts_.end()) {
      old = it->second;
      queue_.erase({old, k});
    }
    const std::int64_t now = old + delta;
    if (now > 0) {
      counts_[k] = now;
      queue_.insert({now, k});
    } else if (it != counts_.end()) {
      counts_.erase(it);
    }
  }

  void apply_merge(std::uint32_t a, std::uint32_t b, std::uint32_t merged) {
    const Key target = key(a, b);
    std::vector<std::uint32_t> affected = std::move(where_[target]);
    where_.erase(target);
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());

    for (std::uint32_t w : affected) {
      auto& s = words_[w];
      bool present = false;
      for (std::size_t i = 0; i + 1 < s.size() && !present; ++i) present = s[i] == a && s[i + 1] == b;
      if (!present) continue;

      const auto freq = static_cast<std::int64_t>(freqs_[w]);
      for (std::size_t i = 0; i + 1 < s.size(); ++i) update(key(s[i], s[i + 1]), -freq);
      std::vector<std::uint32_t> next;
      next.reserve(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == a && s[i + 1] == b) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(s[i]);
        }
      }
      s = std::move(next);
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const Key k = key(s[i], s[i + 1]);
        update(k, freq);
        if (s[i] == merged || s[i + 1] == merged) where_[k].push_back(w);
      }
    }
  }

  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::vector<std::uint32_t>> words_;
  std::vector<std::uint64_t> freqs_;
  std::unordered_map<Key, std::int64_t> counts_;
  std::unordered_map<Key, std::vector<std::uint32_t>> where_;
  std::set<std::pair<std::int64_t, Key>, Order> queue_;
};

}  // namespace

BpeModel learn_bpe(const std::vector<TokenSeq>& corpus, const BpeLearnOptions& options) {
  PairLearner learner(corpus);
  if (learner.empty_corpus()) throw std::invalid_argument("cannot learn subwords from an empty corpus");
  auto merges = learner.learn(options.n_merges, options.min_frequency);
  return BpeModel(std::move(merges), learner.vocab(), options.threshold);
}

// ---------------------------------------------------------------------------
// Application

namespace {

void resplit(const BpeModel& model, const std::string& sym, std::vector<std::string>& out) {
  if (model.threshold() == 0 || is_single_unit(sym) || model.frequency(sym) >= model.threshold()) {
    out.push_back(sym);
    return;
  }
  if (const Merge* m = model.components(sym)) {
    resplit(model, m->left, out);
    resplit(model, m->right, out);
    return;
  }
  for (auto& u : symbol_units(sym)) out.push_back(std::move(u));
}

}  // namespace

std::vector<std::string> segment_word(const BpeModel& model, std::string_view word) {
  std::vector<std::string> syms = word_units(word);
  while (syms.size() > 1) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    std::size_t at = 0;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      if (auto r = model.rank(syms[i], syms[i + 1]); r && *r < best) {
        best = *r;
        at = i;
      }
    }
    if (best == std::numeric_limits<std::size_t>::max()) break;
    const std::string l = syms[at];
    const std::string r = syms[at + 1];
    std::vector<std::string> next;
    next.reserve(syms.size());
    for (std::size_t i = 0; i < syms.size(); ++i) {
      if (i + 1 < syms.size() && syms[i] == l && syms[i + 1] == r) {
        next.push_back(l + r);
        ++i;
      } else {
        next.push_back(std::move(syms[i]));
      }
    }
    syms = std::move(next);
  }

  std::vector<std::string> pieces;
  for (const auto& s : syms) resplit(model, s, pieces);

  // A continuation piece shaped like a special token would read back as a
  // standalone token, so it is emitted unit by unit instead.
  std::vector<std::string> out;
  out.reserve(pieces.size());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i > 0 && is_special_token(pieces[i])) {
      for (auto& u : symbol_units(pieces[i])) out.push_back(std::move(u));
    } else {
      out.push_back(std::move(pieces[i]));
    }
  }
  return out;
}

TokenSeq apply_bpe(const BpeModel& model, const TokenSeq& seq) {
  TokenSeq out;
  out.reserve(seq.size() * 2);
  std::unordered_map<std::string, std::vector<std::string>> cache;
  for (const auto& tok : seq) {
    if (is_special_token(tok)) {
      out.push_back(tok);
      continue;
    }
    auto it = cache.find(tok);
    if (it == cache.end()) it = cache.emplace(tok, segment_word(model, tok)).first;
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
  return out;
}

TokenSeq detok_bpe(const TokenSeq& seq) {
  TokenSeq out;
  std::string word;
  bool in_word = false;
  auto flush = [&] {
    if (in_word) out.push_back(unescape(word));
    word.clear();
    in_word = false;
  };
  for (const auto& tok : seq) {
    if (is_special_token(tok)) {
      flush();
      out.push_back(tok);
    } else if (starts_with_marker(tok)) {
      flush();
      word = tok.substr(kWordMarker.size());
      in_word = true;
    } else {
      word += tok;
      in_word = true;
    }
  }
  flush();
  return out;
}

}  // namespace dgt
