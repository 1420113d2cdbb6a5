#include "ics/data_prep/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ics/errors.hpp"
#include "ics/numerics/rng.hpp"

namespace ics::data {
namespace {

struct Intent {
  const char* name;
  std::vector<const char*> phrases;  // first entry is canonical
  const char* attribute;             // order_status or product_category value
  const char* domain;
};

const std::vector<Intent>& actions() {
  static const std::vector<Intent> a{
      {"return", {"return", "send back", "give back"}, "delivered", "after-sales"},
      {"refund", {"refund", "money back", "reimburse"}, "refunded", "after-sales"},
      {"exchange", {"exchange", "swap", "replace"}, "delivered", "after-sales"},
      {"track", {"track", "where is", "locate"}, "shipped", "logistics"},
      {"cancel", {"cancel", "stop", "call off"}, "pending", "orders"},
      {"invoice", {"invoice", "receipt", "bill"}, "paid", "billing"},
      {"warranty", {"warranty", "repair", "fix"}, "delivered", "after-sales"},
      {"address", {"change address", "update address", "new address"}, "paid", "logistics"},
      {"coupon", {"coupon", "discount", "promo code"}, "pending", "billing"},
      {"payment", {"payment failed", "charged twice", "card declined"}, "pending", "billing"},
      {"late", {"late", "delayed", "slow delivery"}, "shipped", "logistics"},
      {"damaged", {"broken", "damaged", "cracked"}, "returned", "after-sales"},
  };
  return a;
}

const std::vector<Intent>& objects() {
  static const std::vector<Intent> o{
      {"shoes", {"shoes", "sneakers", "boots"}, "apparel", ""},
      {"phone", {"phone", "mobile", "handset"}, "electronics", ""},
      {"jacket", {"jacket", "coat", "hoodie"}, "apparel", ""},
      {"laptop", {"laptop", "notebook", "computer"}, "electronics", ""},
      {"groceries", {"groceries", "vegetables", "snacks"}, "grocery", ""},
      {"sofa", {"sofa", "couch", "armchair"}, "home", ""},
      {"lamp", {"lamp", "light", "bulb"}, "home", ""},
      {"cream", {"cream", "lotion", "skincare"}, "beauty", ""},
      {"headphones", {"headphones", "earbuds", "headset"}, "electronics", ""},
      {"perfume", {"perfume", "fragrance", "cologne"}, "beauty", ""},
  };
  return o;
}

const std::vector<const char*> kOpeners{"hi", "hello", "excuse me", "good morning", "hey there", ""};
const std::vector<const char*> kFillers{"please", "asap", "thanks", "today", "again", "urgently", "", ""};
const std::vector<const char*> kChitChat{"hello are you there", "i have a question", "can you help me",
                                         "hi", "one moment", "ok thanks"};
const std::vector<const char*> kTemplates{"{o} i want to {a} my {b} {f}", "{o} how do i {a} the {b} {f}",
                                          "{o} {a} {b} {f}", "{o} my {b} need to {a} {f}",
                                          "{o} can you help me {a} this {b} {f}", "{b} {a} {f}"};

struct Scenario {
  std::string id;
  const Intent* action;
  const Intent* object;
};

template <typename T>
const T& pick(const std::vector<T>& v, nn::Rng& rng) {
  return v[rng.index(v.size())];
}

std::string fill(std::string tpl, const std::string& key, const std::string& value) {
  for (auto pos = tpl.find(key); pos != std::string::npos; pos = tpl.find(key)) tpl.replace(pos, key.size(), value);
  return tpl;
}

std::string paraphrase(const Scenario& s, nn::Rng& rng) {
  std::string t = pick(kTemplates, rng);
  t = fill(t, "{o}", pick(kOpeners, rng));
  t = fill(t, "{a}", pick(s.action->phrases, rng));
  t = fill(t, "{b}", pick(s.object->phrases, rng));
  t = fill(t, "{f}", pick(kFillers, rng));
  // Collapse the blanks left by empty slots.
  std::string out;
  for (char c : t) {
    if (c == ' ' && (out.empty() || out.back() == ' ')) continue;
    out += c;
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

matcher::AttributeMap attributes_for(const Scenario& s, nn::Rng& rng) {
  static const std::vector<std::string> tiers{"bronze", "silver", "gold", "platinum"};
  static const std::vector<std::string> skills{"general", "logistics", "refunds", "membership", "technical"};
  static const std::vector<std::string> statuses{"pending", "paid", "shipped", "delivered", "returned", "refunded"};
  static const std::vector<std::string> categories{"apparel", "electronics", "grocery", "home", "beauty"};
  matcher::AttributeMap a;
  a["customer_tier"] = pick(tiers, rng);
  a["customer_tenure_days"] = std::floor(rng.uniform(0, 3000));
  // Intent-correlated fields, with some label noise.
  a["order_status"] = rng.bernoulli(0.85) ? std::string(s.action->attribute) : pick(statuses, rng);
  a["product_category"] = rng.bernoulli(0.85) ? std::string(s.object->attribute) : pick(categories, rng);
  a["order_amount"] = std::round(rng.uniform(5, 2000) * 100) / 100;
  a["staff_skill_group"] = pick(skills, rng);
  a["staff_experience_years"] = std::floor(rng.uniform(0, 15));
  if (rng.bernoulli(0.5)) a["recent_complaints"] = static_cast<double>(rng.index(4));
  return a;
}

}  // namespace

void to_json(nlohmann::json& j, const SyntheticConfig& c) {
  j = {{"scenarios", c.scenarios},       {"sessions", c.sessions},         {"rare_scenarios", c.rare_scenarios},
       {"rare_sessions", c.rare_sessions}, {"replay_items", c.replay_items}, {"hover_rate", c.hover_rate},
       {"search_rate", c.search_rate},   {"attribute_rate", c.attribute_rate}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SyntheticConfig& c) {
  SyntheticConfig d;
  c.scenarios = j.value("scenarios", d.scenarios);
  c.sessions = j.value("sessions", d.sessions);
  c.rare_scenarios = j.value("rare_scenarios", d.rare_scenarios);
  c.rare_sessions = j.value("rare_sessions", d.rare_sessions);
  c.replay_items = j.value("replay_items", d.replay_items);
  c.hover_rate = j.value("hover_rate", d.hover_rate);
  c.search_rate = j.value("search_rate", d.search_rate);
  c.attribute_rate = j.value("attribute_rate", d.attribute_rate);
  c.seed = j.value("seed", d.seed);
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
  const auto total_intents = actions().size() * objects().size();
  if (config.scenarios < 2 || config.scenarios > total_intents) {
    throw ConfigError("synthetic corpus supports 2.." + std::to_string(total_intents) + " scenarios");
  }
  if (config.rare_scenarios > config.scenarios ||
      config.rare_scenarios * config.rare_sessions > config.sessions ||
      (config.rare_scenarios == config.scenarios && config.rare_scenarios * config.rare_sessions != config.sessions)) {
    throw ConfigError("rare scenarios need more sessions than the corpus has");
  }
  nn::Rng rng(config.seed);

  std::vector<std::pair<std::size_t, std::size_t>> combos;
  for (std::size_t a = 0; a < actions().size(); ++a) {
    for (std::size_t o = 0; o < objects().size(); ++o) combos.emplace_back(a, o);
  }
  std::shuffle(combos.begin(), combos.end(), rng.engine());

  SyntheticCorpus corpus;
  std::vector<Scenario> scenarios;
  for (std::size_t i = 0; i < config.scenarios; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "S%03zu", i + 1);
    const auto& action = actions()[combos[i].first];
    const auto& object = objects()[combos[i].second];
    scenarios.push_back({id, &action, &object});
    corpus.catalog.push_back({id,
                              std::string("customer wants to ") + action.phrases[0] + " the " + object.phrases[0] +
                                  " " + action.phrases[1] + " " + object.phrases[1],
                              std::string("Guide: ") + action.name + " for " + object.name + " orders, see manual " + id,
                              action.domain});
  }

  std::vector<std::size_t> assignment;
  for (std::size_t r = 0; r < config.rare_scenarios; ++r) {
    for (std::size_t k = 0; k < config.rare_sessions; ++k) assignment.push_back(r);
  }
  while (assignment.size() < config.sessions) {
    assignment.push_back(config.rare_scenarios + rng.index(config.scenarios - config.rare_scenarios));
  }
  std::shuffle(assignment.begin(), assignment.end(), rng.engine());

  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const auto& scenario = scenarios[assignment[i]];
    char id[32];
    std::snprintf(id, sizeof id, "sess-%05zu", i + 1);
    SessionLogRecord s;
    s.id = id;
    double ts = std::floor(rng.uniform(0, 86400));
    if (rng.bernoulli(0.4)) {
      s.utterances.push_back({ts, pick(kChitChat, rng)});
      ts += 5 + rng.index(20);
    }
    s.utterances.push_back({ts, paraphrase(scenario, rng)});
    ts += 3 + rng.index(15);
    if (rng.bernoulli(config.hover_rate)) {
      s.operations.push_back({ts, OperationKind::kHover, scenarios[rng.index(scenarios.size())].id});
      ts += 1;
    }
    s.operations.push_back(
        {ts, rng.bernoulli(config.search_rate) ? OperationKind::kSearch : OperationKind::kClick, scenario.id});
    if (rng.bernoulli(0.2)) {
      ts += 10 + rng.index(30);
      s.utterances.push_back({ts, pick(kChitChat, rng)});
    }
    if (rng.bernoulli(config.attribute_rate)) s.attributes = attributes_for(scenario, rng);
    corpus.logs.push_back(std::move(s));
  }

  nn::Rng replay_rng = rng.fork();
  for (std::size_t i = 0; i < config.replay_items; ++i) {
    const auto& scenario = scenarios[replay_rng.index(scenarios.size())];
    ReplayItem item{paraphrase(scenario, replay_rng), scenario.id, std::nullopt};
    if (replay_rng.bernoulli(config.attribute_rate)) item.aspects = attributes_for(scenario, replay_rng);
    corpus.replay.push_back(std::move(item));
  }
  return corpus;
}

}  // namespace ics::data
