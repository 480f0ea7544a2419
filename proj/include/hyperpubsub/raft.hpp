#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hps::raft {

using NodeId = std::uint32_t;
using Tick = std::uint64_t;

enum class EntryKind : std::uint8_t { noop = 0, transaction = 1, block_cut = 2 };

struct LogEntry {
  std::uint64_t term = 0;
  EntryKind kind = EntryKind::noop;
  std::string payload;

  bool operator==(const LogEntry&) const = default;
};

struct RequestVote {
  std::uint64_t term = 0;
  NodeId candidate = 0;
  std::uint64_t last_log_index = 0;
  std::uint64_t last_log_term = 0;
};

struct RequestVoteReply {
  std::uint64_t term = 0;
  NodeId voter = 0;
  bool granted = false;
};

struct AppendEntries {
  std::uint64_t term = 0;
  NodeId leader = 0;
  std::uint64_t prev_log_index = 0;
  std::uint64_t prev_log_term = 0;
  std::vector<LogEntry> entries;
  std::uint64_t leader_commit = 0;
};

struct AppendEntriesReply {
  std::uint64_t term = 0;
  NodeId follower = 0;
  bool success = false;
  /// On success the last index known to match the leader; on rejection the
  /// follower's last log index, used by the leader to back off next_index.
  std::uint64_t match_index = 0;
};

using Message = std::variant<RequestVote, RequestVoteReply, AppendEntries, AppendEntriesReply>;

std::string encode(const Message& msg);
Message decode_message(std::string_view bytes);

struct Envelope {
  NodeId from = 0;
  NodeId to = 0;
  Message msg;
};

enum class Role { follower, candidate, leader };

std::string_view to_string(Role role);

struct Config {
  Tick election_timeout_min = 150;
  Tick election_timeout_max = 300;
  Tick heartbeat_interval = 50;
  std::size_t max_entries_per_append = 64;
};

/// Consensus state of one orderer. `log[i]` holds index i+1.
struct NodeState {
  NodeId id = 0;
  std::vector<NodeId> cluster;  // every member, including this node

  // Persistent across crashes.
  std::uint64_t current_term = 0;
  std::optional<NodeId> voted_for;
  std::vector<LogEntry> log;

  // Volatile.
  std::uint64_t commit_index = 0;
  Role role = Role::follower;
  std::optional<NodeId> leader_id;
  std::map<NodeId, std::uint64_t> next_index;
  std::map<NodeId, std::uint64_t> match_index;
  std::set<NodeId> votes;

  std::uint64_t last_index() const { return log.size(); }
  std::uint64_t term_at(std::uint64_t index) const { return index == 0 ? 0 : log[index - 1].term; }
  std::size_t majority() const { return cluster.size() / 2 + 1; }
};

/// Moves to `term` as a follower if it is newer than the current term.
void observe_term(NodeState& s, std::uint64_t term);

/// Grants iff msg.term >= current term, no other vote was cast this term and
/// the candidate's log is at least as up-to-date. `granted` in the reply
/// tells the caller to reset its election timer.
RequestVoteReply handle_request_vote(NodeState& s, const RequestVote& msg);

/// Log-matching check, conflicting-suffix truncation, append and commit
/// advance to min(leader_commit, last new index). A reply with term equal to
/// the message term means the sender is the current leader (timer reset).
AppendEntriesReply handle_append_entries(NodeState& s, const AppendEntries& msg);

/// Leader-side commit rule: the highest index replicated on a majority whose
/// entry is from the current term.
void advance_commit(NodeState& s);

enum class ProposeStatus { accepted, redirected, unavailable };

struct ProposeResult {
  ProposeStatus status = ProposeStatus::unavailable;
  std::optional<NodeId> leader;
  std::uint64_t index = 0;
};

/// Single-threaded deterministic Raft node driven by ticks and messages.
class Node {
 public:
  Node(NodeId id, std::vector<NodeId> cluster, Config config, std::uint64_t seed);

  /// Election timeout, heartbeats. Returns outbound messages.
  std::vector<Envelope> tick(Tick now);
  std::vector<Envelope> receive(const Envelope& env, Tick now);
  /// Leader appends; the entry is replicated on the next tick. Followers
  /// redirect to the leader they know of.
  ProposeResult propose(EntryKind kind, std::string payload);

  const NodeState& state() const { return state_; }
  bool is_leader() const { return state_.role == Role::leader; }

  /// Volatile state is lost; term, vote and log survive.
  void crash();
  void restart(Tick now);
  bool up() const { return up_; }

  /// Terms in which this node won an election, in order.
  const std::vector<std::uint64_t>& terms_led() const { return terms_led_; }

 private:
  void reset_election_timer(Tick now);
  void become_candidate(Tick now, std::vector<Envelope>& out);
  void become_leader(Tick now, std::vector<Envelope>& out);
  void send_append(NodeId peer, std::vector<Envelope>& out);
  void broadcast_append(Tick now, std::vector<Envelope>& out);

  NodeState state_;
  Config config_;
  std::mt19937_64 rng_;
  Tick election_deadline_ = 0;
  Tick next_heartbeat_ = 0;
  bool up_ = true;
  bool dirty_ = false;
  std::vector<std::uint64_t> terms_led_;
};

}  // namespace hps::raft
