// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "arena/server.hpp"
#include "fixture_recipes.hpp"
#include "test_support.hpp"

namespace arena {
namespace {

using namespace std::chrono_literals;
using testing::TempDir;
using testing::throws_code;

std::string read_fixture(const char* name) {
  std::ifstream in(std::string(ARENA_FIXTURE_DIR) + "/" + name, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<Envelope> decode_all(std::string_view bytes) {
  std::vector<Envelope> out;
  std::size_t consumed = 0;
  while (auto e = decode_envelope(bytes, &consumed)) {
    out.push_back(*e);
    bytes.remove_prefix(consumed);
  }
  EXPECT_TRUE(bytes.empty());
  return out;
}

std::uint16_t error_code(const Envelope& e) {
  EXPECT_EQ(e.type, MsgType::kError);
  return parse_error_body(e.body).first;
}

// Server on a free port, accept loop on a background thread.
class RunningServer {
 public:
  explicit RunningServer(ServerOptions options = {}) : server_([&] {
    options.port = 0;
    return options;
  }()) {
    server_.start();
    thread_ = std::thread([this] { server_.run(); });
  }
  ~RunningServer() {
    server_.stop();
    thread_.join();
  }
  std::uint16_t port() const { return server_.port(); }
  Server& server() { return server_; }

 private:
  Server server_;
  std::thread thread_;
};

bool wait_for(const std::function<bool()>& pred, std::chrono::milliseconds limit = 5s) {
  const auto deadline = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(10ms);
  }
  return pred();
}

KvDocument small_duel(std::uint64_t seed) {
  KvDocument d;
  d.set("game_id", "duel");
  d.set_int_list("frame_shape", {16, 16, 1});
  d.set("seed", std::to_string(seed));
  return d;
}

TEST(Envelope, RoundTripAndLayout) {
  const Envelope e{MsgType::kStep, 0x01020304, "abc"};
  const std::string bytes = encode_envelope(e);
  ASSERT_EQ(bytes.size(), 12u);
  EXPECT_EQ(bytes.substr(0, 4), std::string("\0\0\0\x08", 4));
  EXPECT_EQ(bytes[4], 0x03);
  EXPECT_EQ(bytes.substr(5, 4), "\x01\x02\x03\x04");
  std::size_t consumed = 0;
  const auto back = decode_envelope(bytes + "tail", &consumed);
  ASSERT_TRUE(back);
  EXPECT_EQ(*back, e);
  EXPECT_EQ(consumed, 12u);
  for (std::size_t n = 0; n < bytes.size(); ++n) EXPECT_FALSE(decode_envelope(bytes.substr(0, n), &consumed)) << n;
}

TEST(Envelope, MalformedLengths) {
  for (const std::uint32_t len : {0u, 4u, kMaxPayload + 1, 0xFFFFFFFFu}) {
    std::string b;
    put_u32(b, len);
    EXPECT_TRUE(throws_code([&] { decode_envelope(b, nullptr); }, Errc::kMalformedEnvelope)) << len;
  }
  std::string ok;
  put_u32(ok, kMaxPayload);
  EXPECT_FALSE(decode_envelope(ok, nullptr));  // legal, waiting for the body
  EXPECT_TRUE(throws_code([] { encode_envelope({MsgType::kOk, 0, std::string(kMaxPayload, 'x')}); },
                          Errc::kMalformedEnvelope));
}

TEST(Envelope, ErrorBody) {
  const std::string b = error_body(Errc::kSessionLimit, "full");
  EXPECT_EQ(b, std::string("\0\x07" "full", 6));
  const auto [code, message] = parse_error_body(b);
  EXPECT_EQ(code, 7);
  EXPECT_EQ(message, "full");
}

TEST(SessionTest, StepBeforeMake) {
  Session s;
  KvDocument step;
  step.set_int("action", 0);
  const auto reply = s.handle({MsgType::kStep, 9, step.serialize()});
  EXPECT_EQ(reply.request_id, 9u);
  EXPECT_EQ(error_code(reply), 2);
  EXPECT_EQ(error_code(s.handle({MsgType::kReset, 10, {}})), 2);
  EXPECT_EQ(error_code(s.handle({MsgType::kBounds, 11, {}})), 2);
}

TEST(SessionTest, UnknownTypeAndVersion) {
  Session s;
  EXPECT_EQ(error_code(s.handle({static_cast<MsgType>(0x10), 1, {}})), 4);
  EXPECT_EQ(error_code(s.handle({static_cast<MsgType>(0xEE), 1, {}})), 4);
  KvDocument hello;
  hello.set_int("protocol_version", 99);
  EXPECT_EQ(error_code(s.handle({MsgType::kHello, 1, hello.serialize()})), 1);
  EXPECT_EQ(s.handle({MsgType::kHello, 1, {}}).type, MsgType::kOk);
  EXPECT_EQ(error_code(s.handle({MsgType::kMake, 1, "not a document"})), 3);
}

TEST(SessionTest, MakeDescribesSpaces) {
  Session s(42);
  const auto reply = s.handle({MsgType::kMake, 1, small_duel(1).serialize()});
  ASSERT_EQ(reply.type, MsgType::kOk);
  const auto doc = KvDocument::parse(reply.body);
  EXPECT_EQ(doc.get_int("action_space.n"), 12);
  EXPECT_EQ(doc.get_string("action_space.type"), "Discrete");
  EXPECT_EQ(doc.get_int("session_id"), 42);
  EXPECT_EQ(doc.get_string("game_id"), "duel");
  EXPECT_EQ(doc.get_int_list("obs.frame.shape"), (std::vector<std::int64_t>{16, 16, 1}));
  const auto local = make("duel", EnvironmentSettings::from_document(small_duel(1)));
  EXPECT_EQ(parse_observation_space(doc).size(), local->observation_space().size());
}

// A session's stream equals the local env's stream for the same settings.
TEST(SessionTest, StreamMatchesLocalEnv) {
  Session s;
  ASSERT_EQ(s.handle({MsgType::kMake, 1, small_duel(7).serialize()}).type, MsgType::kOk);
  auto local = make("duel", EnvironmentSettings::from_document(small_duel(7)));
  EXPECT_EQ(s.handle({MsgType::kReset, 2, {}}).body, testing::stream_bytes(local->reset()));
  Rng rng(3);
  for (std::uint32_t i = 0; i < 200; ++i) {
    const auto a = local->sample_action(rng);
    KvDocument d;
    put_action(d, "action", a);
    const auto reply = s.handle({MsgType::kStep, 3 + i, d.serialize()});
    ASSERT_EQ(reply.type, MsgType::kStepResult);
    StepResult r = local->step(a);
    const bool done = r.done;
    ASSERT_EQ(reply.body, testing::stream_bytes(std::move(r))) << i;
    if (done) EXPECT_EQ(s.handle({MsgType::kReset, 0, {}}).body, testing::stream_bytes(local->reset()));
  }
}

TEST(SessionTest, StepResultFrameLength) {
  for (const bool scale : {false, true}) {
    Session s;
    KvDocument d = small_duel(2);
    d.set_int_list("frame_shape", {24, 20, 3});
    if (scale) d.set_bool("wrappers.scale", true);
    ASSERT_EQ(s.handle({MsgType::kMake, 1, d.serialize()}).type, MsgType::kOk);
    s.handle({MsgType::kReset, 2, {}});
    KvDocument step;
    step.set_int("action", 3);
    const auto reply = s.handle({MsgType::kStep, 3, step.serialize()});
    ASSERT_EQ(reply.type, MsgType::kStepResult);
    const std::uint32_t doc_len = get_u32(reply.body, 0);
    const std::size_t bytes_per = scale ? 4 : 1;
    EXPECT_EQ(reply.body.size(), 4 + doc_len + 24u * 20u * 3u * bytes_per);
    const auto rec = decode_record(reply.body);
    ASSERT_TRUE(rec.frame);
    EXPECT_EQ(rec.frame->shape, (FrameShape{24, 20, 3}));
  }
}

TEST(SessionTest, RenderAndBounds) {
  Session s;
  KvDocument d = small_duel(1);
  d.set_real("wrappers.reward_normalization", 0.5);
  s.handle({MsgType::kMake, 1, d.serialize()});
  s.handle({MsgType::kReset, 2, {}});
  const auto frame = s.handle({MsgType::kRender, 3, {}});
  ASSERT_EQ(frame.type, MsgType::kFrame);
  EXPECT_EQ(decode_record(frame.body).frame->shape, (FrameShape{256, 256, 3}));
  const auto bounds = s.handle({MsgType::kBounds, 4, {}});
  ASSERT_EQ(bounds.type, MsgType::kBoundsReply);
  const auto doc = KvDocument::parse(bounds.body);
  EXPECT_EQ(doc.get_int("min"), -1872);
  EXPECT_EQ(doc.get_int("max"), 3328);
  EXPECT_EQ(doc.get_int("delta_h"), 208);
  EXPECT_DOUBLE_EQ(doc.get_real("normalized.min"), -18.0);
  EXPECT_DOUBLE_EQ(doc.get_real("normalized.max"), 32.0);
}

TEST(SessionTest, TwoPlayerStepNeedsBothKeys) {
  Session s;
  KvDocument d = small_duel(1);
  d.set("player", "P1P2");
  s.handle({MsgType::kMake, 1, d.serialize()});
  s.handle({MsgType::kReset, 2, {}});
  KvDocument one;
  one.set_int("action.P1", 0);
  EXPECT_EQ(error_code(s.handle({MsgType::kStep, 3, one.serialize()})), 10);
  one.set_int("action.P2", 0);
  const auto r = s.handle({MsgType::kStep, 4, one.serialize()});
  ASSERT_EQ(r.type, MsgType::kStepResult);
  const auto step = step_from_record(decode_record(r.body));
  ASSERT_EQ(step.reward.size(), 2u);
  EXPECT_EQ(step.reward[0] + step.reward[1], 0.0);
}

TEST(SessionTest, RecordOverSession) {
  TempDir dir;
  Session s;
  s.handle({MsgType::kMake, 1, small_duel(4).serialize()});
  KvDocument start;
  start.set("file_path", dir.file("wire.traj"));
  start.set("user_name", "wire");
  ASSERT_EQ(s.handle({MsgType::kRecordStart, 2, start.serialize()}).type, MsgType::kOk);
  EXPECT_EQ(error_code(s.handle({MsgType::kRecordStart, 3, start.serialize()})), 2);
  s.handle({MsgType::kReset, 4, {}});
  std::uint32_t steps = 0;
  while (true) {
    KvDocument step;
    step.set_int("action", static_cast<std::int64_t>(steps % 12));
    const auto r = s.handle({MsgType::kStep, 5, step.serialize()});
    ASSERT_EQ(r.type, MsgType::kStepResult);
    ++steps;
    if (step_from_record(decode_record(r.body)).done) break;
  }
  const auto stop = s.handle({MsgType::kRecordStop, 6, {}});
  ASSERT_EQ(stop.type, MsgType::kOk);
  const auto doc = KvDocument::parse(stop.body);
  EXPECT_EQ(doc.get_int("episode_count"), 1);
  EXPECT_EQ(doc.get_int_list("step_counts"), (std::vector<std::int64_t>{steps}));
  EXPECT_EQ(doc.get_int("dropped_steps"), 0);
  EXPECT_EQ(validate_trajectory(dir.file("wire.traj")).step_count, steps);
  EXPECT_EQ(error_code(s.handle({MsgType::kRecordStop, 7, {}})), 2);
  // The session keeps working after the recorder is removed.
  EXPECT_EQ(s.handle({MsgType::kReset, 8, {}}).type, MsgType::kObs);

  KvDocument bad;
  bad.set("file_path", "/nonexistent-dir/x.traj");
  EXPECT_EQ(error_code(s.handle({MsgType::kRecordStart, 9, bad.serialize()})), 18);
  EXPECT_EQ(s.handle({MsgType::kReset, 10, {}}).type, MsgType::kObs);
}

TEST(Transcript, FrozenRequestsMatchRecipes) {
  EXPECT_TRUE(read_fixture(fixtures::kBasicRequestsName) == fixtures::encode_all(fixtures::basic_requests()));
  EXPECT_TRUE(read_fixture(fixtures::kErrorRequestsName) == fixtures::encode_all(fixtures::error_requests()));
}

TEST(Transcript, BasicReplaysInProcess) {
  const auto requests = decode_all(read_fixture(fixtures::kBasicRequestsName));
  ASSERT_EQ(requests.size(), 5u);
  const std::string frozen = read_fixture(fixtures::kBasicRepliesName);
  ASSERT_FALSE(frozen.empty());
  EXPECT_TRUE(fixtures::replay_in_process(requests) == frozen);
  const auto replies = decode_all(frozen);
  ASSERT_EQ(replies.size(), 5u);
  const MsgType expected[] = {MsgType::kOk, MsgType::kOk, MsgType::kObs, MsgType::kStepResult,
                              MsgType::kBoundsReply};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(replies[i].type, expected[i]) << i;
    EXPECT_EQ(replies[i].request_id, requests[i].request_id);
  }
}

TEST(Transcript, ErrorsReplayInProcess) {
  const auto requests = decode_all(read_fixture(fixtures::kErrorRequestsName));
  const std::string frozen = read_fixture(fixtures::kErrorRepliesName);
  EXPECT_TRUE(fixtures::replay_in_process(requests) == frozen);
  const auto replies = decode_all(frozen);
  ASSERT_EQ(replies.size(), 11u);
  // HELLO v2, STEP before MAKE, unknown type, unknown game, bad settings,
  // MAKE, STEP before RESET, RESET, out-of-range action, CLOSE, RESET.
  const int codes[] = {1, 2, 4, 5, 6, -1, 9, -1, 8, -1, 2};
  for (std::size_t i = 0; i < replies.size(); ++i) {
    EXPECT_EQ(replies[i].request_id, requests[i].request_id);
    if (codes[i] < 0) {
      EXPECT_NE(replies[i].type, MsgType::kError) << i;
    } else {
      EXPECT_EQ(error_code(replies[i]), codes[i]) << i;
    }
  }
}

// The same bytes sent over a socket to a fresh server come back identical.
TEST(Transcript, BasicReplaysOverSocket) {
  RunningServer server;
  WireClient client("127.0.0.1", server.port());
  const std::string requests = read_fixture(fixtures::kBasicRequestsName);
  client.send_raw(requests);
  std::string got;
  for (std::size_t i = 0; i < 5; ++i) got += encode_envelope(client.receive());
  EXPECT_TRUE(got == read_fixture(fixtures::kBasicRepliesName));
}

TEST(Server, PipelinedRequestIdsPair) {
  RunningServer server;
  WireClient client("127.0.0.1", server.port());
  std::string batch;
  batch += encode_envelope({MsgType::kHello, 700, {}});
  batch += encode_envelope({MsgType::kMake, 9, small_duel(1).serialize()});
  batch += encode_envelope({MsgType::kReset, 0xFFFFFFFF, {}});
  batch += encode_envelope({MsgType::kBounds, 3, {}});
  client.send_raw(batch);
  for (const std::uint32_t id : {700u, 9u, 0xFFFFFFFFu, 3u}) {
    const auto reply = client.receive();
    EXPECT_EQ(reply.request_id, id);
    EXPECT_NE(reply.type, MsgType::kError);
  }
}

TEST(Server, IndependentSessions) {
  RunningServer server;
  WireClient a("127.0.0.1", server.port());
  WireClient b("127.0.0.1", server.port());
  WireClient c("127.0.0.1", server.port());
  const auto ida = a.make(small_duel(5)).get_int("session_id");
  const auto idb = b.make(small_duel(5)).get_int("session_id");
  c.make(small_duel(6));
  EXPECT_NE(ida, idb);
  auto local = make("duel", EnvironmentSettings::from_document(small_duel(5)));
  const auto first = testing::stream_bytes(local->reset());
  EXPECT_EQ(testing::stream_bytes(a.reset()), first);
  EXPECT_EQ(testing::stream_bytes(b.reset()), first);
  EXPECT_NE(testing::stream_bytes(c.reset()), first);
  // Interleaved stepping with different actions: each session follows its own local twin.
  auto twin_b = make("duel", EnvironmentSettings::from_document(small_duel(5)));
  twin_b->reset();
  Rng ra(1), rb(2);
  for (int i = 0; i < 100; ++i) {
    const auto xa = local->sample_action(ra);
    const auto xb = twin_b->sample_action(rb);
    const auto sa = testing::stream_bytes(a.step(xa));
    const auto sb = testing::stream_bytes(b.step(xb));
    StepResult la = local->step(xa);
    StepResult lb = twin_b->step(xb);
    const bool da = la.done, db = lb.done;
    ASSERT_EQ(sa, testing::stream_bytes(std::move(la)));
    ASSERT_EQ(sb, testing::stream_bytes(std::move(lb)));
    if (da) ASSERT_EQ(testing::stream_bytes(a.reset()), testing::stream_bytes(local->reset()));
    if (db) ASSERT_EQ(testing::stream_bytes(b.reset()), testing::stream_bytes(twin_b->reset()));
  }
}

TEST(Server, SessionLimit) {
  ServerOptions o;
  o.max_sessions = 2;
  RunningServer server(o);
  WireClient a("127.0.0.1", server.port());
  WireClient b("127.0.0.1", server.port());
  a.call(MsgType::kHello);
  b.call(MsgType::kHello);
  WireClient c("127.0.0.1", server.port());
  const auto refusal = c.receive();
  EXPECT_EQ(refusal.request_id, 0u);
  EXPECT_EQ(error_code(refusal), 7);
  EXPECT_TRUE(throws_code([&] { c.receive(); }, Errc::kIo));
  EXPECT_EQ(server.server().active_sessions(), 2);
}

TEST(Server, SlotFreedAfterDisconnect) {
  ServerOptions o;
  o.max_sessions = 1;
  RunningServer server(o);
  {
    WireClient a("127.0.0.1", server.port());
    a.call(MsgType::kHello);
    EXPECT_EQ(server.server().active_sessions(), 1);
  }
  ASSERT_TRUE(wait_for([&] { return server.server().active_sessions() == 0; }));
  WireClient b("127.0.0.1", server.port());
  EXPECT_EQ(b.call(MsgType::kHello).type, MsgType::kOk);
}

TEST(Server, IdleSessionsAreReaped) {
  ServerOptions o;
  o.idle_timeout = 300ms;
  RunningServer server(o);
  WireClient idle("127.0.0.1", server.port());
  idle.make(small_duel(1));
  WireClient busy("127.0.0.1", server.port());
  busy.make(small_duel(1));
  busy.reset();
  EXPECT_EQ(server.server().active_sessions(), 2);
  const auto start = std::chrono::steady_clock::now();
  while (std::chrono::steady_clock::now() - start < 900ms) {
    busy.call(MsgType::kBounds);
    std::this_thread::sleep_for(50ms);
  }
  ASSERT_TRUE(wait_for([&] { return server.server().active_sessions() == 1; }));
  EXPECT_TRUE(throws_code([&] { idle.reset(); }, Errc::kIo));
  EXPECT_NO_THROW(busy.reset());
}

// Garbage and failing requests on some connections leave a concurrent
// healthy session untouched.
TEST(Server, PoisonedSessionsAreIsolated) {
  RunningServer server;
  WireClient healthy("127.0.0.1", server.port());
  healthy.make(small_duel(9));
  auto local = make("duel", EnvironmentSettings::from_document(small_duel(9)));
  ASSERT_EQ(testing::stream_bytes(healthy.reset()), testing::stream_bytes(local->reset()));

  WireClient bad_length("127.0.0.1", server.port());
  std::string tiny;
  put_u32(tiny, 2);
  tiny += "xx";
  bad_length.send_raw(tiny);
  const auto err = bad_length.receive();
  EXPECT_EQ(err.request_id, 0u);
  EXPECT_EQ(error_code(err), 3);
  EXPECT_TRUE(throws_code([&] { bad_length.receive(); }, Errc::kIo));

  WireClient huge("127.0.0.1", server.port());
  std::string big;
  put_u32(big, kMaxPayload + 1);
  huge.send_raw(big);
  EXPECT_EQ(error_code(huge.receive()), 3);

  WireClient misuse("127.0.0.1", server.port());
  misuse.make(small_duel(9));
  EXPECT_EQ(error_code(misuse.call(MsgType::kStep, "action = 99\n")), 9);
  misuse.reset();
  EXPECT_EQ(error_code(misuse.call(MsgType::kStep, "action = 99\n")), 8);
  EXPECT_EQ(error_code(misuse.call(MsgType::kStep, "garbage")), 3);
  EXPECT_EQ(error_code(misuse.call(static_cast<MsgType>(0x55))), 4);

  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto a = local->sample_action(rng);
    const auto got = testing::stream_bytes(healthy.step(a));
    StepResult r = local->step(a);
    const bool done = r.done;
    ASSERT_EQ(got, testing::stream_bytes(std::move(r)));
    if (done) ASSERT_EQ(testing::stream_bytes(healthy.reset()), testing::stream_bytes(local->reset()));
  }
}

TEST(Server, RecordingOverTheWire) {
  TempDir dir;
  RunningServer server;
  WireClient client("127.0.0.1", server.port());
  client.make(small_duel(12));
  KvDocument start;
  start.set("file_path", dir.file("net.traj"));
  start.set("user_name", "net");
  ASSERT_EQ(client.call(MsgType::kRecordStart, start.serialize()).type, MsgType::kOk);
  Rng rng(1);
  ActionSpaceSpec space = make_action_space(*GameRegistry::builtin().find("duel"), {});
  for (int e = 0; e < 2; ++e) {
    client.reset();
    while (!client.step(ActionInput::one(space.sample(rng))).done) {
    }
  }
  const auto stop = client.call(MsgType::kRecordStop);
  ASSERT_EQ(stop.type, MsgType::kOk);
  EXPECT_EQ(KvDocument::parse(stop.body).get_int("episode_count"), 2);
  EXPECT_EQ(validate_trajectory(dir.file("net.traj")).episode_count, 2u);
}

TEST(Server, BindFailure) {
  RunningServer first;
  ServerOptions o;
  o.port = first.port();
  Server second(o);
  EXPECT_TRUE(throws_code([&] { second.start(); }, Errc::kBindFailure));
}

TEST(Server, PortFromEnvironment) {
  ::setenv("ARENA_PORT", "12345", 1);
  EXPECT_EQ(port_from_environment(), 12345);
  ::setenv("ARENA_PORT", "70000", 1);
  EXPECT_TRUE(throws_code([] { port_from_environment(); }, Errc::kInvalidConfig));
  ::unsetenv("ARENA_PORT");
  EXPECT_EQ(port_from_environment(), kDefaultPort);
}

}  // namespace
}  // namespace arena
