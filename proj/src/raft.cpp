#include "hyperpubsub/raft.hpp"

#include <algorithm>

#include "hyperpubsub/codec.hpp"
#include "hyperpubsub/error.hpp"

namespace hps::raft {
namespace {

enum Tag : std::uint64_t { kRequestVote = 1, kRequestVoteReply = 2, kAppendEntries = 3, kAppendEntriesReply = 4 };

}  // namespace

std::string encode(const Message& msg) {
  Encoder enc;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RequestVote>) {
          enc.u64(kRequestVote).u64(m.term).u64(m.candidate).u64(m.last_log_index).u64(m.last_log_term);
        } else if constexpr (std::is_same_v<T, RequestVoteReply>) {
          enc.u64(kRequestVoteReply).u64(m.term).u64(m.voter).u64(m.granted ? 1 : 0);
        } else if constexpr (std::is_same_v<T, AppendEntries>) {
          enc.u64(kAppendEntries).u64(m.term).u64(m.leader).u64(m.prev_log_index).u64(m.prev_log_term);
          enc.count(m.entries.size());
          for (const auto& e : m.entries) enc.u64(e.term).u64(static_cast<std::uint64_t>(e.kind)).bytes(e.payload);
          enc.u64(m.leader_commit);
        } else {
          enc.u64(kAppendEntriesReply).u64(m.term).u64(m.follower).u64(m.success ? 1 : 0).u64(m.match_index);
        }
      },
      msg);
  return std::move(enc).take();
}

Message decode_message(std::string_view bytes) {
  Decoder dec(bytes);
  auto id = [&] { return static_cast<NodeId>(dec.u64()); };
  Message out;
  switch (dec.u64()) {
    case kRequestVote: {
      RequestVote m;
      m.term = dec.u64();
      m.candidate = id();
      m.last_log_index = dec.u64();
      m.last_log_term = dec.u64();
      out = m;
      break;
    }
    case kRequestVoteReply: {
      RequestVoteReply m;
      m.term = dec.u64();
      m.voter = id();
      m.granted = dec.u64() != 0;
      out = m;
      break;
    }
    case kAppendEntries: {
      AppendEntries m;
      m.term = dec.u64();
      m.leader = id();
      m.prev_log_index = dec.u64();
      m.prev_log_term = dec.u64();
      m.entries.resize(dec.count());
      for (auto& e : m.entries) {
        e.term = dec.u64();
        auto kind = dec.u64();
        if (kind > 2) throw Error(Errc::malformed, "unknown raft entry kind");
        e.kind = static_cast<EntryKind>(kind);
        e.payload = dec.bytes();
      }
      m.leader_commit = dec.u64();
      out = std::move(m);
      break;
    }
    case kAppendEntriesReply: {
      AppendEntriesReply m;
      m.term = dec.u64();
      m.follower = id();
      m.success = dec.u64() != 0;
      m.match_index = dec.u64();
      out = m;
      break;
    }
    default:
      throw Error(Errc::malformed, "unknown raft message tag");
  }
  dec.finish();
  return out;
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::follower: return "follower";
    case Role::candidate: return "candidate";
    case Role::leader: return "leader";
  }
  return "unknown";
}

void observe_term(NodeState& s, std::uint64_t term) {
  if (term <= s.current_term) return;
  s.current_term = term;
  s.voted_for.reset();
  s.role = Role::follower;
  s.leader_id.reset();
  s.votes.clear();
}

RequestVoteReply handle_request_vote(NodeState& s, const RequestVote& msg) {
  observe_term(s, msg.term);
  RequestVoteReply reply{s.current_term, s.id, false};
  if (msg.term < s.current_term) return reply;
  const auto my_last_term = s.term_at(s.last_index());
  const bool up_to_date = msg.last_log_term > my_last_term ||
                          (msg.last_log_term == my_last_term && msg.last_log_index >= s.last_index());
  if ((!s.voted_for || *s.voted_for == msg.candidate) && up_to_date) {
    s.voted_for = msg.candidate;
    reply.granted = true;
  }
  return reply;
}

AppendEntriesReply handle_append_entries(NodeState& s, const AppendEntries& msg) {
  observe_term(s, msg.term);
  AppendEntriesReply reply{s.current_term, s.id, false, s.last_index()};
  if (msg.term < s.current_term) return reply;

  // Only one leader per term: whoever sent this is it.
  s.role = Role::follower;
  s.leader_id = msg.leader;
  s.votes.clear();

  if (msg.prev_log_index > s.last_index()) return reply;
  if (s.term_at(msg.prev_log_index) != msg.prev_log_term) {
    reply.match_index = msg.prev_log_index - 1;
    return reply;
  }

  auto index = msg.prev_log_index;
  for (const auto& entry : msg.entries) {
    ++index;
    if (index <= s.last_index()) {
      if (s.term_at(index) == entry.term) continue;
      s.log.resize(index - 1);  // conflicting suffix; never committed
    }
    s.log.push_back(entry);
  }
  reply.success = true;
  reply.match_index = index;
  if (msg.leader_commit > s.commit_index) {
    s.commit_index = std::max(s.commit_index, std::min(msg.leader_commit, index));
  }
  return reply;
}

void advance_commit(NodeState& s) {
  if (s.role != Role::leader) return;
  for (auto n = s.last_index(); n > s.commit_index; --n) {
    if (s.term_at(n) != s.current_term) break;
    std::size_t replicas = 1;
    for (const auto& [peer, match] : s.match_index) replicas += match >= n;
    if (replicas >= s.majority()) {
      s.commit_index = n;
      return;
    }
  }
}

Node::Node(NodeId id, std::vector<NodeId> cluster, Config config, std::uint64_t seed)
    : config_(config), rng_(seed ^ (0x9e3779b97f4a7c15ULL * (id + 1))) {
  state_.id = id;
  state_.cluster = std::move(cluster);
  reset_election_timer(0);
}

void Node::reset_election_timer(Tick now) {
  std::uniform_int_distribution<Tick> dist(config_.election_timeout_min, config_.election_timeout_max);
  election_deadline_ = now + dist(rng_);
}

void Node::send_append(NodeId peer, std::vector<Envelope>& out) {
  auto next = std::max<std::uint64_t>(1, state_.next_index[peer]);
  AppendEntries ae;
  ae.term = state_.current_term;
  ae.leader = state_.id;
  ae.prev_log_index = next - 1;
  ae.prev_log_term = state_.term_at(next - 1);
  auto last = std::min<std::uint64_t>(state_.last_index(), next - 1 + config_.max_entries_per_append);
  for (auto i = next; i <= last; ++i) ae.entries.push_back(state_.log[i - 1]);
  ae.leader_commit = state_.commit_index;
  out.push_back({state_.id, peer, std::move(ae)});
}

void Node::broadcast_append(Tick now, std::vector<Envelope>& out) {
  for (auto peer : state_.cluster) {
    if (peer != state_.id) send_append(peer, out);
  }
  next_heartbeat_ = now + config_.heartbeat_interval;
  dirty_ = false;
}

void Node::become_candidate(Tick now, std::vector<Envelope>& out) {
  ++state_.current_term;
  state_.role = Role::candidate;
  state_.voted_for = state_.id;
  state_.leader_id.reset();
  state_.votes = {state_.id};
  reset_election_timer(now);
  if (state_.votes.size() >= state_.majority()) {
    become_leader(now, out);
    return;
  }
  RequestVote rv{state_.current_term, state_.id, state_.last_index(), state_.term_at(state_.last_index())};
  for (auto peer : state_.cluster) {
    if (peer != state_.id) out.push_back({state_.id, peer, rv});
  }
}

void Node::become_leader(Tick now, std::vector<Envelope>& out) {
  state_.role = Role::leader;
  state_.leader_id = state_.id;
  state_.next_index.clear();
  state_.match_index.clear();
  for (auto peer : state_.cluster) {
    if (peer == state_.id) continue;
    state_.next_index[peer] = state_.last_index() + 1;
    state_.match_index[peer] = 0;
  }
  // A no-op from the new term lets earlier-term entries commit.
  state_.log.push_back({state_.current_term, EntryKind::noop, {}});
  terms_led_.push_back(state_.current_term);
  advance_commit(state_);
  broadcast_append(now, out);
}

std::vector<Envelope> Node::tick(Tick now) {
  std::vector<Envelope> out;
  if (!up_) return out;
  if (state_.role == Role::leader) {
    if (now >= next_heartbeat_ || dirty_) broadcast_append(now, out);
  } else if (now >= election_deadline_) {
    become_candidate(now, out);
  }
  return out;
}

std::vector<Envelope> Node::receive(const Envelope& env, Tick now) {
  std::vector<Envelope> out;
  if (!up_) return out;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RequestVote>) {
          auto reply = handle_request_vote(state_, m);
          if (reply.granted) reset_election_timer(now);
          out.push_back({state_.id, env.from, reply});
        } else if constexpr (std::is_same_v<T, RequestVoteReply>) {
          observe_term(state_, m.term);
          if (state_.role == Role::candidate && m.term == state_.current_term && m.granted) {
            state_.votes.insert(m.voter);
            if (state_.votes.size() >= state_.majority()) become_leader(now, out);
          }
        } else if constexpr (std::is_same_v<T, AppendEntries>) {
          auto reply = handle_append_entries(state_, m);
          if (m.term == state_.current_term) reset_election_timer(now);
          out.push_back({state_.id, env.from, reply});
        } else {
          observe_term(state_, m.term);
          if (state_.role != Role::leader || m.term != state_.current_term) return;
          auto peer = m.follower;
          if (m.success) {
            state_.match_index[peer] = std::max(state_.match_index[peer], m.match_index);
            state_.next_index[peer] = std::max(state_.next_index[peer], state_.match_index[peer] + 1);
            advance_commit(state_);
            if (state_.next_index[peer] <= state_.last_index()) send_append(peer, out);
          } else {
            auto next = state_.next_index[peer];
            state_.next_index[peer] = std::max<std::uint64_t>(1, std::min(next - 1, m.match_index + 1));
            send_append(peer, out);
          }
        }
      },
      env.msg);
  return out;
}

ProposeResult Node::propose(EntryKind kind, std::string payload) {
  if (!up_) return {ProposeStatus::unavailable, std::nullopt, 0};
  if (state_.role != Role::leader) {
    if (state_.leader_id) return {ProposeStatus::redirected, state_.leader_id, 0};
    return {ProposeStatus::unavailable, std::nullopt, 0};
  }
  state_.log.push_back({state_.current_term, kind, std::move(payload)});
  advance_commit(state_);
  // Replication goes out with the next tick so bursts share one round.
  dirty_ = true;
  return {ProposeStatus::accepted, state_.id, state_.last_index()};
}

void Node::crash() {
  up_ = false;
  state_.commit_index = 0;
  state_.role = Role::follower;
  state_.leader_id.reset();
  state_.next_index.clear();
  state_.match_index.clear();
  state_.votes.clear();
  dirty_ = false;
}

void Node::restart(Tick now) {
  up_ = true;
  reset_election_timer(now);
}

}  // namespace hps::raft
