// SPDX-License-Identifier: Apache-2.0
#include "arena/spaces.hpp"

#include <algorithm>
#include <set>

#include "arena/errors.hpp"

namespace arena {
namespace {

std::string_view kind_name(SpaceKind k) {
  switch (k) {
    case SpaceKind::kBox: return "box";
    case SpaceKind::kDiscrete: return "discrete";
    case SpaceKind::kBinary: return "binary";
  }
  return "box";
}

SpaceKind kind_from(std::string_view s) {
  if (s == "box") return SpaceKind::kBox;
  if (s == "discrete") return SpaceKind::kDiscrete;
  if (s == "binary") return SpaceKind::kBinary;
  throw Error(Errc::kFormatError, "unknown space kind '" + std::string(s) + "'");
}

}  // namespace

std::string_view dtype_name(DType dtype) { return dtype == DType::kU8 ? "uint8" : "float32"; }

DType dtype_from_name(std::string_view name) {
  if (name == "uint8") return DType::kU8;
  if (name == "float32") return DType::kF32;
  throw Error(Errc::kFormatError, "unknown dtype '" + std::string(name) + "'");
}

Input ActionSpaceSpec::decode(const EncodedAction& a) const {
  if (kind == ActionSpaceKind::kDiscrete) {
    if (a.size() != 1 || a[0] < 0 || a[0] >= discrete_size()) {
      throw Error(Errc::kActionOutOfRange, "discrete action must be one index in [0, " +
                                               std::to_string(discrete_size()) + ")");
    }
    if (a[0] < move_count) return {a[0], 0};
    return {kMoveNone, a[0] - move_count + 1};
  }
  if (a.size() != 2 || a[0] < 0 || a[0] >= move_count || a[1] < 0 || a[1] >= attack_count) {
    throw Error(Errc::kActionOutOfRange, "multi-discrete action must be (move < " + std::to_string(move_count) +
                                             ", attack < " + std::to_string(attack_count) + ")");
  }
  return {a[0], a[1]};
}

EncodedAction ActionSpaceSpec::encode(const Input& in) const {
  if (kind == ActionSpaceKind::kMultiDiscrete) return {in.move, in.attack};
  if (in.attack != 0 && in.move != kMoveNone) {
    throw Error(Errc::kActionOutOfRange, "discrete space cannot express move and attack together");
  }
  return {in.attack != 0 ? move_count + in.attack - 1 : in.move};
}

EncodedAction ActionSpaceSpec::noop() const {
  return kind == ActionSpaceKind::kDiscrete ? EncodedAction{0} : EncodedAction{0, 0};
}

EncodedAction ActionSpaceSpec::sample(Rng& rng) const {
  if (kind == ActionSpaceKind::kDiscrete) return {static_cast<int>(uniform_below(rng, discrete_size()))};
  const int m = static_cast<int>(uniform_below(rng, move_count));
  const int k = static_cast<int>(uniform_below(rng, attack_count));
  return {m, k};
}

bool ActionSpaceSpec::contains(const EncodedAction& a) const {
  try {
    decode(a);
    return true;
  } catch (const Error&) {
    return false;
  }
}

KvDocument ActionSpaceSpec::describe() const {
  KvDocument d;
  d.set("action_space.type", std::string(action_space_name(kind)));
  d.set_bool("action_space.combos", combos);
  d.set_int("action_space.players", players);
  if (kind == ActionSpaceKind::kDiscrete) {
    d.set_int("action_space.n", discrete_size());
  } else {
    d.set_int_list("action_space.nvec", {move_count, attack_count});
  }
  return d;
}

ActionSpaceSpec make_action_space(const GameDefinition& def, const EnvironmentSettings& settings) {
  ActionSpaceSpec a;
  a.kind = settings.action_space;
  a.combos = settings.attack_but_combination;
  a.move_count = kMoveCount;
  a.attack_count = def.attack_count(settings.attack_but_combination);
  a.players = settings.two_player() ? 2 : 1;
  return a;
}

std::size_t SpaceSpec::element_count() const {
  std::size_t n = 1;
  for (const int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

const Frame* Observation::frame() const {
  const auto it = entries.find(std::string(kFrameKey));
  return it == entries.end() ? nullptr : std::get_if<Frame>(&it->second);
}

Frame* Observation::frame() {
  const auto it = entries.find(std::string(kFrameKey));
  return it == entries.end() ? nullptr : std::get_if<Frame>(&it->second);
}

const std::vector<double>* Observation::values(std::string_view key) const {
  const auto it = entries.find(std::string(key));
  return it == entries.end() ? nullptr : std::get_if<std::vector<double>>(&it->second);
}

KvDocument describe_observation_space(const ObservationSpace& space) {
  KvDocument d;
  std::vector<std::string> keys;
  for (const auto& [key, spec] : space) {
    keys.push_back(key);
    const std::string p = "obs." + key + ".";
    d.set(p + "kind", std::string(kind_name(spec.kind)));
    std::vector<std::int64_t> shape(spec.shape.begin(), spec.shape.end());
    d.set_int_list(p + "shape", shape);
    if (spec.kind == SpaceKind::kBox) {
      d.set_real(p + "low", spec.low);
      d.set_real(p + "high", spec.high);
    }
    if (spec.kind == SpaceKind::kDiscrete) d.set_int(p + "n", spec.n);
    d.set(p + "dtype", spec.is_frame ? std::string(dtype_name(spec.frame_dtype)) : std::string("float64"));
  }
  d.set_string_list("obs.keys", keys);
  return d;
}

ObservationSpace parse_observation_space(const KvDocument& doc) {
  ObservationSpace space;
  if (!doc.contains("obs.keys")) return space;
  for (const auto& key : doc.get_string_list("obs.keys")) {
    const std::string p = "obs." + key + ".";
    SpaceSpec s;
    s.kind = kind_from(doc.get_string(p + "kind"));
    for (const auto d : doc.get_int_list(p + "shape")) s.shape.push_back(static_cast<int>(d));
    if (s.kind == SpaceKind::kBox) {
      s.low = doc.get_real(p + "low");
      s.high = doc.get_real(p + "high");
    }
    if (s.kind == SpaceKind::kDiscrete) s.n = static_cast<int>(doc.get_int(p + "n"));
    const auto& dtype = doc.get_string(p + "dtype");
    if (dtype != "float64") {
      s.is_frame = true;
      s.frame_dtype = dtype_from_name(dtype);
    }
    space.emplace(key, std::move(s));
  }
  return space;
}

bool conforms(const ObservationSpace& space, const Observation& obs, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (space.size() != obs.entries.size()) return fail("key count differs");
  for (const auto& [key, spec] : space) {
    const auto it = obs.entries.find(key);
    if (it == obs.entries.end()) return fail("missing key " + key);
    if (spec.is_frame) {
      const auto* f = std::get_if<Frame>(&it->second);
      if (!f) return fail(key + " is not a frame");
      if (spec.shape != std::vector<int>{f->shape.height, f->shape.width, f->shape.channels}) {
        return fail(key + " frame shape differs");
      }
      if (f->dtype != spec.frame_dtype) return fail(key + " dtype differs");
      const std::size_t n = f->dtype == DType::kU8 ? f->u8.size() : f->f32.size();
      if (n != f->value_count()) return fail(key + " buffer size differs");
    } else {
      const auto* v = std::get_if<std::vector<double>>(&it->second);
      if (!v) return fail(key + " is not numeric");
      if (v->size() != spec.element_count()) return fail(key + " length differs");
      for (const double x : *v) {
        if (spec.kind == SpaceKind::kBox && (x < spec.low || x > spec.high)) return fail(key + " out of bounds");
        if (spec.kind == SpaceKind::kDiscrete && (x < 0 || x >= spec.n)) return fail(key + " out of range");
        if (spec.kind == SpaceKind::kBinary && x != 0 && x != 1) return fail(key + " not binary");
      }
    }
  }
  return true;
}

}  // namespace arena
