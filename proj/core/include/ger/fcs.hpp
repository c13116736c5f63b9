#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ger/network.hpp"

namespace ger {

using Matrix = std::vector<std::vector<double>>;

struct CompensationSplit {
  std::vector<double> surplus;  // non-negative parts (p_pp)
  std::vector<double> deficit;  // non-positive parts (p_nn)
};

/// Element-wise split of desired compensations into surplus and deficit parts.
CompensationSplit split(const std::vector<double>& p_c);

/// b[s][d]: surplus of s shared with adjacent deficit d in proportion to |p_nn[d]|.
Matrix offers(const std::vector<double>& surplus, const std::vector<double>& deficit,
              const Topology& topology);

/// c[s][d]: offers scaled down per deficit column so no deficit receives more than it asked.
Matrix scale(const Matrix& offers, const std::vector<double>& deficit);

/// Net realized compensation per node: sent (>= 0) for surplus nodes, received (<= 0) for deficits.
std::vector<double> realized(const Matrix& transfers);

enum class Round { broadcast = 0, offer = 1, accept = 2 };

const char* to_string(Round round);

struct Message {
  Round round = Round::broadcast;
  std::size_t sender = 0;
  std::size_t receiver = 0;
  double payload = 0.0;
  double payload_back = 0.0;  // broadcast only: the receiver's own p_c echoed on the link
};

struct ExchangeResult {
  Matrix transfers;
  std::vector<double> mp_c;
  std::vector<Message> log;
};

/// Runs the compensation exchange as three synchronous rounds of node-local
/// logic: (a) link-level exchange of p_c on every edge, (b) surplus nodes send
/// offers to adjacent deficits, (c) deficit nodes scale and acknowledge.
/// Matches realized(scale(offers(split(p_c)), p_nn)) exactly.
ExchangeResult run_exchange(const std::vector<double>& p_c, const Topology& topology);

/// One JSON object per message, newline separated.
std::string to_jsonl(const std::vector<Message>& log, const std::vector<std::string>& node_ids,
                     long step = -1);

}  // namespace ger
