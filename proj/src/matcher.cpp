#include "tpld/matcher.hpp"

#include "tpld/random.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <tuple>

namespace tpld {

namespace {

bool is_move_result(Opcode op) {
  return op == Opcode::kMoveResult || op == Opcode::kMoveResultObject;
}

bool own_field(const Instruction& insn, const ClassDef& cls) {
  return insn.field && insn.field->owner == cls.name;
}

}  // namespace

ClassFacts::ClassFacts(const ClassDef& def, const FuzzyConfig& fuzzy)
    : cls(&def), stateful(statefulness(def) == Statefulness::kStateful) {
  methods.reserve(def.methods.size());
  for (const auto& method : def.methods) {
    MethodFacts facts;
    facts.ops = slice_opcodes(method);
    facts.op_count = facts.ops.count();
    facts.signature = fuzzy_signature(method, fuzzy);
    total_ops += facts.op_count;
    methods.push_back(std::move(facts));
  }
}

std::vector<ClassFacts> analyze_classes(const CodeModel& model,
                                        const FuzzyConfig& fuzzy) {
  std::vector<ClassFacts> out;
  out.reserve(model.classes.size());
  for (const auto& cls : model.classes) {
    out.emplace_back(cls, fuzzy);
  }
  return out;
}

Statefulness statefulness(const ClassDef& cls) {
  const bool any_instance = std::any_of(
      cls.fields.begin(), cls.fields.end(),
      [](const FieldDef& f) { return !f.is_static; });
  return any_instance ? Statefulness::kStateful : Statefulness::kStateless;
}

OpcodeSet slice_opcodes(const MethodDef& method) {
  OpcodeSet out;
  if (method.param_types.empty()) {
    for (const auto& insn : method.code) {
      out.set(static_cast<std::size_t>(insn.opcode));
    }
    return out;
  }

  std::vector<bool> tainted(method.registers, false);
  for (std::size_t r = 0; r < method.param_types.size() && r < tainted.size();
       ++r) {
    tainted[r] = true;
  }
  std::vector<bool> in_slice(method.code.size(), false);
  auto taint_defs = [&](const Instruction& insn) {
    bool changed = false;
    for (const auto reg : insn.defs) {
      if (reg < tainted.size() && !tainted[reg]) {
        tainted[reg] = true;
        changed = true;
      }
    }
    return changed;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < method.code.size(); ++i) {
      if (in_slice[i]) continue;
      const auto& insn = method.code[i];
      bool hit = std::any_of(insn.uses.begin(), insn.uses.end(), [&](auto reg) {
        return reg < tainted.size() && tainted[reg];
      });
      // A move-result carries the value of the invoke right before it.
      if (!hit && is_move_result(insn.opcode) && i > 0 && in_slice[i - 1] &&
          is_invoke(method.code[i - 1].opcode)) {
        hit = true;
      }
      if (hit) {
        in_slice[i] = true;
        taint_defs(insn);
        changed = true;
      }
    }
  }

  for (std::size_t i = 0; i < method.code.size(); ++i) {
    if (in_slice[i] || is_return(method.code[i].opcode)) {
      out.set(static_cast<std::size_t>(method.code[i].opcode));
    }
  }
  return out;
}

double method_overlap(const OpcodeSet& app_ops, const OpcodeSet& lib_ops) {
  const auto lib_count = lib_ops.count();
  if (lib_count == 0) return 0.0;
  return static_cast<double>((app_ops & lib_ops).count()) /
         static_cast<double>(lib_count);
}

double method_overlap(const MethodDef& app, const MethodDef& lib) {
  return method_overlap(slice_opcodes(app), slice_opcodes(lib));
}

std::optional<std::uint32_t> MemberMatch::app_for(
    std::uint32_t lib_method) const {
  for (const auto& p : pairs) {
    if (p.lib_method == lib_method) return p.app_method;
  }
  return std::nullopt;
}

MemberMatch match_members(const ClassFacts& app, const ClassFacts& lib,
                          double threshold) {
  std::vector<MethodPair> candidates;
  for (std::uint32_t l = 0; l < lib.methods.size(); ++l) {
    const auto& lm = lib.methods[l];
    if (lm.op_count == 0) continue;
    for (std::uint32_t a = 0; a < app.methods.size(); ++a) {
      const auto& am = app.methods[a];
      if (am.signature != lm.signature) continue;
      const double overlap = method_overlap(am.ops, lm.ops);
      if (overlap > threshold) {
        candidates.push_back({l, a, overlap});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const MethodPair& x, const MethodPair& y) {
              if (x.overlap != y.overlap) return x.overlap > y.overlap;
              return std::tie(x.lib_method, x.app_method) <
                     std::tie(y.lib_method, y.app_method);
            });

  std::vector<bool> lib_used(lib.methods.size(), false);
  std::vector<bool> app_used(app.methods.size(), false);
  MemberMatch out;
  for (const auto& pair : candidates) {
    if (lib_used[pair.lib_method] || app_used[pair.app_method]) continue;
    lib_used[pair.lib_method] = true;
    app_used[pair.app_method] = true;
    out.pairs.push_back(pair);
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const MethodPair& x, const MethodPair& y) {
              return x.lib_method < y.lib_method;
            });
  return out;
}

double stateless_cms(const ClassFacts& lib, const MemberMatch& members) {
  if (lib.methods.empty()) return 0.0;
  const double r_m = static_cast<double>(members.pairs.size()) /
                     static_cast<double>(lib.methods.size());
  double r_o = 0.0;
  if (lib.total_ops > 0) {
    std::size_t matched_ops = 0;
    for (const auto& pair : members.pairs) {
      matched_ops += lib.methods[pair.lib_method].op_count;
    }
    r_o = static_cast<double>(matched_ops) /
          static_cast<double>(lib.total_ops);
  }
  return (r_m + r_o) / 2.0;
}

// Kuhn-Munkres with potentials on the square padding of the matrix,
// minimizing (max_weight - weight).
std::vector<std::pair<std::size_t, std::size_t>> hungarian_max_match(
    const WeightMatrix& weights) {
  const std::size_t rows = weights.size();
  const std::size_t cols = rows == 0 ? 0 : weights.front().size();
  if (rows == 0 || cols == 0) return {};
  for (const auto& row : weights) {
    if (row.size() != cols) {
      throw Error("hungarian_max_match: ragged weight matrix");
    }
  }
  const std::size_t n = std::max(rows, cols);
  double max_weight = 0.0;
  for (const auto& row : weights) {
    for (const double w : row) max_weight = std::max(max_weight, w);
  }
  auto cost = [&](std::size_t i, std::size_t j) {
    const double w = (i < rows && j < cols) ? weights[i][j] : 0.0;
    return max_weight - w;
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is the virtual start.
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<std::size_t> match_of_col(n + 1, 0);
  std::vector<std::size_t> way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match_of_col[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match_of_col[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match_of_col[j0] = match_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = match_of_col[j];
    if (i == 0) continue;
    if (i - 1 < rows && j - 1 < cols && weights[i - 1][j - 1] > 0.0) {
      out.emplace_back(i - 1, j - 1);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::uint32_t> FieldCorrespondence::app_for(
    std::uint32_t lib_field) const {
  for (const auto& p : pairs) {
    if (p.lib_field == lib_field) return p.app_field;
  }
  return std::nullopt;
}

std::vector<FieldProfile> field_profiles(
    const ClassDef& cls, const std::vector<std::uint32_t>& methods,
    const FuzzyConfig& fuzzy) {
  std::vector<FieldProfile> out;
  out.reserve(cls.fields.size());
  std::map<std::string_view, std::size_t> by_name;
  for (std::size_t i = 0; i < cls.fields.size(); ++i) {
    out.push_back({fuzzy_type(cls.fields[i].type, fuzzy), 0, 0});
    by_name.emplace(cls.fields[i].name, i);
  }
  for (const auto m : methods) {
    for (const auto& insn : cls.methods[m].code) {
      if (!own_field(insn, cls)) continue;
      const auto it = by_name.find(insn.field->name);
      if (it == by_name.end()) continue;
      if (insn.field->access == FieldAccess::kRead) {
        ++out[it->second].reads;
      } else {
        ++out[it->second].writes;
      }
    }
  }
  return out;
}

FieldMatchResult match_fields(const ClassDef& app, const ClassDef& lib,
                              const MemberMatch& members,
                              const FuzzyConfig& fuzzy) {
  std::vector<std::uint32_t> lib_methods;
  std::vector<std::uint32_t> app_methods;
  for (const auto& pair : members.pairs) {
    lib_methods.push_back(pair.lib_method);
    app_methods.push_back(pair.app_method);
  }
  const auto lib_profiles = field_profiles(lib, lib_methods, fuzzy);
  const auto app_profiles = field_profiles(app, app_methods, fuzzy);

  FieldMatchResult out;
  if (!lib_profiles.empty() && !app_profiles.empty()) {
    WeightMatrix weights(lib_profiles.size(),
                         std::vector<double>(app_profiles.size(), 0.0));
    for (std::size_t l = 0; l < lib_profiles.size(); ++l) {
      for (std::size_t a = 0; a < app_profiles.size(); ++a) {
        weights[l][a] = lib_profiles[l] == app_profiles[a] ? 1.0 : 0.0;
      }
    }
    for (const auto& [l, a] : hungarian_max_match(weights)) {
      out.fields.pairs.push_back(
          {static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(a)});
    }
  }

  std::vector<bool> lib_matched(lib.fields.size(), false);
  for (const auto& p : out.fields.pairs) lib_matched[p.lib_field] = true;
  for (const auto& pair : members.pairs) {
    bool touches_unmatched = false;
    for (const auto& insn : lib.methods[pair.lib_method].code) {
      if (!own_field(insn, lib)) continue;
      for (std::size_t f = 0; f < lib.fields.size(); ++f) {
        if (lib.fields[f].name == insn.field->name && !lib_matched[f]) {
          touches_unmatched = true;
        }
      }
    }
    if (!touches_unmatched) out.members.pairs.push_back(pair);
  }
  return out;
}

std::vector<CallSequence> gen_call_sequences(const ClassDef& lib,
                                             const MemberMatch& members,
                                             std::uint32_t count,
                                             std::uint32_t draws,
                                             std::uint64_t seed) {
  if (members.empty()) {
    throw Error("gen_call_sequences: empty member match");
  }
  std::vector<std::uint32_t> ctors;
  std::vector<std::uint32_t> others;
  std::uint32_t lowest = std::numeric_limits<std::uint32_t>::max();
  for (const auto& pair : members.pairs) {
    const auto& method = lib.methods[pair.lib_method];
    (method.is_constructor ? ctors : others).push_back(pair.lib_method);
    lowest = std::min(lowest, pair.lib_method);
  }
  // Only constructors matched: draw from them too.
  const auto& pool = others.empty() ? ctors : others;

  std::vector<CallSequence> out;
  out.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    Rng rng(mix64(seed + k));
    CallSequence sequence;
    sequence.reserve(draws + 1);
    sequence.push_back(ctors.empty() ? lowest : rng.pick(ctors));
    for (std::uint32_t s = 0; s < draws; ++s) sequence.push_back(rng.pick(pool));
    out.push_back(std::move(sequence));
  }
  return out;
}

CallSequence app_image(const CallSequence& lib_sequence,
                       const MemberMatch& members) {
  CallSequence out;
  out.reserve(lib_sequence.size());
  for (const auto m : lib_sequence) {
    const auto image = members.app_for(m);
    if (!image) {
      throw Error("app_image: method outside the member match");
    }
    out.push_back(*image);
  }
  return out;
}

std::string FieldOp::serialize() const {
  std::string out;
  switch (kind) {
    case FieldOpKind::kInitialization:
      out = "init";
      break;
    case FieldOpKind::kAssignment:
      out = "assign";
      break;
    case FieldOpKind::kInvocation:
      out = "invoke";
      break;
  }
  out += '|';
  out += std::to_string(field_number);
  out += '|';
  out += field_type;
  out += '|';
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(params[i].first);
    out += ':';
    out += params[i].second;
  }
  return out;
}

// Writes record the method parameters they store (position, fuzzy type);
// invocations record the argument positions fed by a matched-field read.
std::vector<FieldOp> field_op_sequence(
    const ClassDef& cls, const CallSequence& sequence,
    const std::vector<std::uint32_t>& matched_fields,
    const FuzzyConfig& fuzzy) {
  std::map<std::string_view, std::uint32_t> matched;  // name -> field index
  for (const auto f : matched_fields) {
    matched.emplace(cls.fields[f].name, f);
  }
  std::map<std::uint32_t, std::uint32_t> numbering;  // field index -> number
  auto number_of = [&numbering](std::uint32_t field) {
    const auto it = numbering.find(field);
    if (it != numbering.end()) return it->second;
    const auto n = static_cast<std::uint32_t>(numbering.size() + 1);
    numbering.emplace(field, n);
    return n;
  };

  std::vector<FieldOp> out;
  constexpr std::uint32_t kNoField = std::numeric_limits<std::uint32_t>::max();
  for (const auto m : sequence) {
    const auto& method = cls.methods[m];
    std::vector<std::uint32_t> last_field(method.registers, kNoField);
    std::vector<bool> holds_param(method.registers, false);
    for (std::size_t r = 0; r < method.param_types.size() && r < holds_param.size();
         ++r) {
      holds_param[r] = true;
    }

    for (const auto& insn : method.code) {
      std::optional<std::uint32_t> field_index;
      if (own_field(insn, cls)) {
        if (const auto it = matched.find(insn.field->name); it != matched.end()) {
          field_index = it->second;
        }
      }

      if (field_index && insn.field->access == FieldAccess::kWrite) {
        FieldOp op;
        op.kind = method.is_constructor ? FieldOpKind::kInitialization
                                        : FieldOpKind::kAssignment;
        op.field_number = number_of(*field_index);
        op.field_type = fuzzy_type(cls.fields[*field_index].type, fuzzy);
        for (const auto reg : insn.uses) {
          if (reg < holds_param.size() && holds_param[reg]) {
            op.params.emplace_back(reg,
                                   fuzzy_type(method.param_types[reg], fuzzy));
          }
        }
        out.push_back(std::move(op));
      } else if (insn.method && is_invoke(insn.opcode)) {
        // One op per distinct field, in order of first argument position.
        std::vector<std::uint32_t> order;
        std::map<std::uint32_t, std::vector<std::uint32_t>> positions;
        for (std::uint32_t pos = 0; pos < insn.uses.size(); ++pos) {
          const auto reg = insn.uses[pos];
          if (reg >= last_field.size() || last_field[reg] == kNoField) continue;
          const auto f = last_field[reg];
          if (!positions.contains(f)) order.push_back(f);
          positions[f].push_back(pos);
        }
        for (const auto f : order) {
          FieldOp op;
          op.kind = FieldOpKind::kInvocation;
          op.field_number = number_of(f);
          op.field_type = fuzzy_type(cls.fields[f].type, fuzzy);
          for (const auto pos : positions[f]) {
            op.params.emplace_back(pos, op.field_type);
          }
          out.push_back(std::move(op));
        }
      }

      for (const auto reg : insn.defs) {
        if (reg >= last_field.size()) continue;
        holds_param[reg] = false;
        last_field[reg] =
            (field_index && insn.field->access == FieldAccess::kRead)
                ? *field_index
                : kNoField;
      }
    }
  }
  return out;
}

FunctionalitySummary summarize(const std::vector<FieldOp>& ops) {
  FunctionalitySummary out;
  out.elements.reserve(ops.size());
  for (const auto& op : ops) {
    out.elements.push_back(hash128(op.serialize()));
  }
  return out;
}

double summary_similarity(const FunctionalitySummary& app,
                          const FunctionalitySummary& lib,
                          double min_agreement) {
  if (lib.elements.empty()) {
    return app.elements.empty() ? 1.0 : 0.0;
  }
  if (app.elements.empty()) return 0.0;
  WeightMatrix weights(lib.elements.size(),
                       std::vector<double>(app.elements.size(), 0.0));
  for (std::size_t l = 0; l < lib.elements.size(); ++l) {
    for (std::size_t a = 0; a < app.elements.size(); ++a) {
      const double agreement = bit_agreement(lib.elements[l], app.elements[a]);
      weights[l][a] = agreement >= min_agreement ? agreement : 0.0;
    }
  }
  const auto matches = hungarian_max_match(weights);
  return static_cast<double>(matches.size()) /
         static_cast<double>(lib.elements.size());
}

double stateful_cms(const ClassDef& app, const ClassDef& lib,
                    const MemberMatch& members,
                    const FieldCorrespondence& fields, const MatchConfig& config,
                    std::uint64_t seed) {
  if (members.empty() || config.sequences == 0) return 0.0;
  std::vector<std::uint32_t> lib_fields;
  std::vector<std::uint32_t> app_fields;
  for (const auto& p : fields.pairs) {
    lib_fields.push_back(p.lib_field);
    app_fields.push_back(p.app_field);
  }
  const auto sequences =
      gen_call_sequences(lib, members, config.sequences, config.draws, seed);
  double total = 0.0;
  for (const auto& lib_seq : sequences) {
    const auto app_seq = app_image(lib_seq, members);
    const auto lib_summary =
        summarize(field_op_sequence(lib, lib_seq, lib_fields, config.fuzzy));
    const auto app_summary =
        summarize(field_op_sequence(app, app_seq, app_fields, config.fuzzy));
    total += summary_similarity(app_summary, lib_summary, config.op_agreement);
  }
  return total / static_cast<double>(sequences.size());
}

std::string_view to_string(MatchTier tier) {
  switch (tier) {
    case MatchTier::kNone:
      return "none";
    case MatchTier::kMatched:
      return "matched";
    case MatchTier::kHighConfidence:
      return "high_confidence";
  }
  return "none";
}

MatchTier tier_for(double cms, const MatchConfig& config) {
  if (cms >= config.high_confidence_threshold) return MatchTier::kHighConfidence;
  if (cms >= config.class_threshold) return MatchTier::kMatched;
  return MatchTier::kNone;
}

ClassMatchResult match_class(const ClassFacts& app, const ClassFacts& lib,
                             const MatchConfig& config) {
  ClassMatchResult out;
  if (app.stateful != lib.stateful) return out;

  const auto members = match_members(app, lib, config.class_threshold);
  out.gate_score = stateless_cms(lib, members);
  if (!lib.stateful) {
    out.cms = out.gate_score;
    out.tier = tier_for(out.cms, config);
    return out;
  }

  if (!(out.gate_score > config.class_threshold)) return out;
  const auto fields = match_fields(*app.cls, *lib.cls, members, config.fuzzy);
  if (fields.members.empty()) return out;
  out.cms = stateful_cms(*app.cls, *lib.cls, fields.members, fields.fields,
                         config, derive_seed(config.seed, lib.cls->name));
  out.tier = tier_for(out.cms, config);
  return out;
}

}  // namespace tpld
