#include "ger/fcs.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ger {

CompensationSplit split(const std::vector<double>& p_c) {
  CompensationSplit out{std::vector<double>(p_c.size(), 0.0), std::vector<double>(p_c.size(), 0.0)};
  for (std::size_t i = 0; i < p_c.size(); ++i) {
    if (p_c[i] > 0.0) {
      out.surplus[i] = p_c[i];
    } else if (p_c[i] < 0.0) {
      out.deficit[i] = p_c[i];
    }
  }
  return out;
}

Matrix offers(const std::vector<double>& surplus, const std::vector<double>& deficit,
              const Topology& topology) {
  const std::size_t n = surplus.size();
  Matrix b(n, std::vector<double>(n, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    if (!(surplus[s] > 0.0)) continue;
    double denominator = 0.0;
    for (std::size_t g = 0; g < n; ++g) {
      if (topology.adjacent(s, g)) denominator += std::abs(deficit[g]);
    }
    if (denominator == 0.0) continue;
    for (std::size_t d = 0; d < n; ++d) {
      if (topology.adjacent(s, d) && deficit[d] < 0.0)
        b[s][d] = surplus[s] * std::abs(deficit[d]) / denominator;
    }
  }
  return b;
}

Matrix scale(const Matrix& b, const std::vector<double>& deficit) {
  const std::size_t n = b.size();
  Matrix c = b;
  for (std::size_t d = 0; d < n; ++d) {
    double offered = 0.0;
    for (std::size_t s = 0; s < n; ++s) offered += b[s][d];
    const double need = std::abs(deficit[d]);
    if (offered > need && offered != 0.0) {
      for (std::size_t s = 0; s < n; ++s) c[s][d] = b[s][d] * need / offered;
    }
  }
  return c;
}

std::vector<double> realized(const Matrix& c) {
  const std::size_t n = c.size();
  std::vector<double> mp(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sent = 0.0;
    double received = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sent += c[i][j];
      received += c[j][i];
    }
    if (sent > 0.0) {
      mp[i] = sent;
    } else if (received > 0.0) {
      mp[i] = -received;
    }
  }
  return mp;
}

const char* to_string(Round round) {
  switch (round) {
    case Round::broadcast: return "broadcast";
    case Round::offer: return "offer";
    default: return "accept";
  }
}

namespace {

// Node-local view; each agent only reads its own inbox.
struct Agent {
  double p_c = 0.0;
  std::map<std::size_t, double> neighbor_p_c;
  std::map<std::size_t, double> offers_in;
  std::map<std::size_t, double> accepted_in;
};

}  // namespace

ExchangeResult run_exchange(const std::vector<double>& p_c, const Topology& topology) {
  const std::size_t n = p_c.size();
  if (topology.size() != n) throw std::invalid_argument("run_exchange: topology size mismatch");
  std::vector<Agent> agents(n);
  for (std::size_t i = 0; i < n; ++i) agents[i].p_c = p_c[i];

  ExchangeResult out;
  out.transfers.assign(n, std::vector<double>(n, 0.0));

  // (a) link-level exchange: one frame per edge carries both endpoint values.
  std::vector<Message> outbox;
  for (const auto& [i, j] : topology.edges()) {
    outbox.push_back({Round::broadcast, i, j, agents[i].p_c, agents[j].p_c});
  }
  for (const auto& m : outbox) {
    agents[m.receiver].neighbor_p_c[m.sender] = m.payload;
    agents[m.sender].neighbor_p_c[m.receiver] = m.payload_back;
  }
  out.log.insert(out.log.end(), outbox.begin(), outbox.end());
  outbox.clear();

  // (b) surplus nodes offer proportionally to adjacent deficits.
  for (std::size_t s = 0; s < n; ++s) {
    const auto& me = agents[s];
    if (!(me.p_c > 0.0)) continue;
    double denominator = 0.0;
    for (const auto& [g, value] : me.neighbor_p_c) {
      if (value < 0.0) denominator += std::abs(value);
    }
    if (denominator == 0.0) continue;
    for (const auto& [d, value] : me.neighbor_p_c) {
      if (value < 0.0) outbox.push_back({Round::offer, s, d, me.p_c * std::abs(value) / denominator, 0.0});
    }
  }
  for (const auto& m : outbox) agents[m.receiver].offers_in[m.sender] = m.payload;
  out.log.insert(out.log.end(), outbox.begin(), outbox.end());
  outbox.clear();

  // (c) deficit nodes cap the total they accept at their own need.
  for (std::size_t d = 0; d < n; ++d) {
    const auto& me = agents[d];
    if (me.offers_in.empty()) continue;
    double offered = 0.0;
    for (const auto& [s, b] : me.offers_in) offered += b;
    const double need = std::abs(me.p_c);
    const bool capped = offered > need && offered != 0.0;
    for (const auto& [s, b] : me.offers_in) {
      outbox.push_back({Round::accept, d, s, capped ? b * need / offered : b, 0.0});
    }
  }
  for (const auto& m : outbox) {
    agents[m.receiver].accepted_in[m.sender] = m.payload;
    out.transfers[m.receiver][m.sender] = m.payload;
  }
  out.log.insert(out.log.end(), outbox.begin(), outbox.end());

  out.mp_c.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sent = 0.0;
    for (const auto& [d, c] : agents[i].accepted_in) sent += c;
    double received = 0.0;
    for (const auto& [s, c] : agents[i].offers_in) received += out.transfers[s][i];
    if (sent > 0.0) {
      out.mp_c[i] = sent;
    } else if (received > 0.0) {
      out.mp_c[i] = -received;
    }
  }
  return out;
}

std::string to_jsonl(const std::vector<Message>& log, const std::vector<std::string>& ids, long step) {
  std::ostringstream os;
  for (const auto& m : log) {
    nlohmann::ordered_json j;
    if (step >= 0) j["step"] = step;
    j["round"] = to_string(m.round);
    j["sender"] = ids.at(m.sender);
    j["receiver"] = ids.at(m.receiver);
    j["payload_kw"] = m.payload;
    if (m.round == Round::broadcast) j["payload_back_kw"] = m.payload_back;
    os << j.dump() << '\n';
  }
  return os.str();
}

}  // namespace ger
