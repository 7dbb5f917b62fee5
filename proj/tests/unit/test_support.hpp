#pragma once

#include <string>
#include <vector>

#include "tpld/cdg.hpp"
#include "tpld/code_model.hpp"
#include "tpld/random.hpp"

namespace tpld::test {

inline Instruction op(Opcode opcode, std::vector<std::uint32_t> defs = {},
                      std::vector<std::uint32_t> uses = {}) {
  Instruction insn;
  insn.opcode = opcode;
  insn.defs = std::move(defs);
  insn.uses = std::move(uses);
  return insn;
}

inline Instruction read_field(std::uint32_t dst, std::string owner,
                              std::string field) {
  auto insn = op(Opcode::kIget, {dst});
  insn.field = FieldRef{std::move(owner), std::move(field), FieldAccess::kRead};
  return insn;
}

inline Instruction write_field(std::uint32_t value, std::string owner,
                               std::string field) {
  auto insn = op(Opcode::kIput, {}, {value});
  insn.field = FieldRef{std::move(owner), std::move(field), FieldAccess::kWrite};
  return insn;
}

inline Instruction invoke(std::vector<std::uint32_t> args, std::string owner,
                          std::string name) {
  auto insn = op(Opcode::kInvokeVirtual, {}, std::move(args));
  insn.method = MethodRef{std::move(owner), std::move(name)};
  return insn;
}

inline Instruction const_string(std::uint32_t dst, std::string text) {
  auto insn = op(Opcode::kConstString, {dst});
  insn.literal = std::move(text);
  return insn;
}

inline MethodDef method(std::string name, std::vector<std::string> params,
                        std::string ret, std::uint32_t registers,
                        std::vector<Instruction> code, bool ctor = false) {
  MethodDef m;
  m.name = std::move(name);
  m.is_constructor = ctor;
  m.param_types = std::move(params);
  m.return_type = std::move(ret);
  m.registers = registers;
  m.code = std::move(code);
  return m;
}

inline ClassDef klass(std::string name, Feature feature = Feature::kDefault,
                      std::optional<std::string> super = std::nullopt,
                      std::vector<std::string> interfaces = {}) {
  ClassDef c;
  c.name = std::move(name);
  c.feature = feature;
  c.superclass = std::move(super);
  c.interfaces = std::move(interfaces);
  return c;
}

inline CodeModel library(std::string name, std::string version,
                         std::vector<ClassDef> classes) {
  CodeModel m;
  m.kind = ModelKind::kLibrary;
  m.name = std::move(name);
  m.version = std::move(version);
  m.classes = std::move(classes);
  m.renumber_ordinals();
  return m;
}

inline CodeModel app(std::string name, std::vector<ClassDef> classes) {
  CodeModel m;
  m.kind = ModelKind::kApp;
  m.name = std::move(name);
  m.classes = std::move(classes);
  m.renumber_ordinals();
  return m;
}

// Random directed graph without self loops; each ordered pair gets an edge
// with probability p, kind chosen uniformly.
inline ClassDependencyGraph random_graph(Rng& rng, std::uint32_t n, double p) {
  std::vector<std::string> names;
  std::vector<Feature> features;
  std::vector<Edge> edges;
  for (std::uint32_t i = 0; i < n; ++i) {
    names.push_back("n" + std::to_string(i));
    features.push_back(static_cast<Feature>(rng.index(4)));
  }
  for (NodeId s = 0; s < n; ++s) {
    for (NodeId d = 0; d < n; ++d) {
      if (s != d && rng.chance(p)) {
        edges.push_back({s, d, rng.chance(0.5) ? EdgeKind::kExtends
                                               : EdgeKind::kImplements});
      }
    }
  }
  return ClassDependencyGraph(std::move(names), std::move(features),
                              std::move(edges));
}

}  // namespace tpld::test
