#pragma once

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "slalom/error.hpp"

namespace slalom {

// Function-word categories for style matching. A word may belong to more than
// one category.
class CategoryTable {
 public:
  void add(const std::string& category, const std::string& word) {
    auto it = std::find(names_.begin(), names_.end(), category);
    std::size_t idx = static_cast<std::size_t>(it - names_.begin());
    if (it == names_.end()) {
      names_.push_back(category);
      entries_.emplace_back();
    }
    entries_[idx].push_back(word);
    index_[word].insert(idx);
  }

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& words(std::size_t category) const {
    return entries_.at(category);
  }

  // Categories containing `word` (already lowercased); empty when none.
  const std::set<std::size_t>& lookup(const std::string& word) const {
    static const std::set<std::size_t> kNone;
    auto it = index_.find(word);
    return it == index_.end() ? kNone : it->second;
  }

  // One "category<TAB>word" line per entry, categories in insertion order.
  void dump(std::ostream& out) const {
    for (std::size_t c = 0; c < names_.size(); ++c) {
      for (const auto& w : entries_[c]) out << names_[c] << '\t' << w << '\n';
    }
  }

  static CategoryTable parse(std::istream& in) {
    CategoryTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
        throw ParseError(line_no, "expected 'category<TAB>word'");
      }
      std::string word = line.substr(tab + 1);
      for (auto& c : word) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      }
      table.add(line.substr(0, tab), word);
    }
    if (table.empty()) throw ValidationError("category table is empty");
    return table;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<std::string>> entries_;
  std::map<std::string, std::set<std::size_t>> index_;
};

namespace detail {

constexpr std::string_view kDefaultCategories[][2] = {
    {"personal_pronouns",
     "i me my mine myself we us our ours ourselves you your yours yourself "
     "yourselves he him his himself she her hers herself they them their "
     "theirs themselves"},
    {"impersonal_pronouns",
     "it its itself this that these those something anything everything "
     "nothing someone anyone everyone nobody somebody anybody everybody what "
     "which whatever whichever"},
    {"articles", "a an the"},
    {"prepositions",
     "about above across after against along among around at before behind "
     "below beneath beside between beyond by down during except for from in "
     "inside into near of off on onto out outside over through to toward "
     "towards under until up upon with within without"},
    {"conjunctions",
     "and but or nor so yet because although though while whereas if unless "
     "since whether"},
    {"auxiliary_verbs",
     "am is are was were be been being have has had having do does did will "
     "would shall should can could may might must"},
    {"negations",
     "no not never none neither cannot can't don't doesn't didn't won't "
     "wouldn't isn't aren't wasn't weren't haven't hasn't hadn't shouldn't "
     "couldn't"},
    {"quantifiers",
     "all some many much few more most less least several each every both "
     "enough lot lots plenty any"},
    {"common_adverbs",
     "very really just also too quite rather so then now here there always "
     "often sometimes usually again still already even only"},
};

}  // namespace detail

// Nine categories: personal and impersonal pronouns, articles, prepositions,
// conjunctions, auxiliary verbs, negations, quantifiers, common adverbs.
inline const CategoryTable& default_categories() {
  static const CategoryTable table = [] {
    CategoryTable t;
    for (const auto& [name, words] : detail::kDefaultCategories) {
      std::istringstream in{std::string(words)};
      std::string w;
      while (in >> w) t.add(std::string(name), w);
    }
    return t;
  }();
  return table;
}

}  // namespace slalom
