#include "tpld/corpus.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "tpld/hash.hpp"
#include "tpld/random.hpp"

namespace tpld::corpus {

namespace {

constexpr std::array<Opcode, 11> kBinaryOps = {
    Opcode::kAdd, Opcode::kSub, Opcode::kMul, Opcode::kDiv,
    Opcode::kRem, Opcode::kAnd, Opcode::kOr,  Opcode::kXor,
    Opcode::kShl, Opcode::kShr, Opcode::kUshr};

constexpr std::array<Opcode, 10> kUnaryOps = {
    Opcode::kNeg,        Opcode::kNot,        Opcode::kIntToLong,
    Opcode::kIntToFloat, Opcode::kIntToDouble, Opcode::kLongToInt,
    Opcode::kFloatToInt, Opcode::kDoubleToInt, Opcode::kIntToByte,
    Opcode::kIntToChar};

constexpr std::array<Opcode, 8> kCompareOps = {
    Opcode::kIfEq, Opcode::kIfNe, Opcode::kIfLt, Opcode::kIfGe,
    Opcode::kIfGt, Opcode::kIfLe, Opcode::kIfEqz, Opcode::kIfNez};

bool is_binary(Opcode op) {
  return std::find(kBinaryOps.begin(), kBinaryOps.end(), op) != kBinaryOps.end();
}

std::string class_descriptor(const std::string& name) {
  return "L" + name + ";";
}

// Statement shapes a generated method body is drawn from. Each method uses a
// random subset so opcode sets differ between methods.
enum class Shape {
  kBinary,
  kUnary,
  kConst,
  kConstString,
  kMove,
  kBranch,
  kFieldRead,
  kFieldWrite,
  kInvoke,
  kArray,
  kCheck,
};

constexpr std::array<Shape, 11> kShapes = {
    Shape::kBinary,     Shape::kUnary,  Shape::kConst,     Shape::kConstString,
    Shape::kMove,       Shape::kBranch, Shape::kFieldRead, Shape::kFieldWrite,
    Shape::kInvoke,     Shape::kArray,  Shape::kCheck};

struct MethodTarget {
  std::string owner;
  std::string name;
  std::uint32_t arity = 0;
  bool returns_value = false;
};

class BodyBuilder {
 public:
  BodyBuilder(Rng& rng, const ClassDef& cls,
              const std::vector<MethodTarget>& targets,
              const std::vector<std::string>& literals)
      : rng_(rng), cls_(cls), targets_(targets), literals_(literals) {}

  MethodDef build(std::string name, bool ctor, std::vector<std::string> params,
                  std::string ret) {
    MethodDef method;
    method.name = std::move(name);
    method.is_constructor = ctor;
    method.param_types = std::move(params);
    method.return_type = std::move(ret);
    const auto params_count = static_cast<std::uint32_t>(method.param_types.size());
    method.registers = params_count + rng_.range(3, 6);
    defined_.clear();
    for (std::uint32_t r = 0; r < params_count; ++r) defined_.push_back(r);
    next_local_ = params_count;
    params_ = params_count;
    registers_ = method.registers;

    // Per-method vocabulary: a few shapes and one operator per shape.
    std::vector<Shape> shapes(kShapes.begin(), kShapes.end());
    rng_.shuffle(shapes);
    shapes.resize(rng_.range(3, 6));
    binary_ = kBinaryOps[rng_.index(kBinaryOps.size())];
    binary_alt_ = kBinaryOps[rng_.index(kBinaryOps.size())];
    unary_ = kUnaryOps[rng_.index(kUnaryOps.size())];
    compare_ = kCompareOps[rng_.index(kCompareOps.size())];

    std::vector<Instruction> code;
    if (ctor) {
      // Constructors initialize instance fields from their parameters.
      for (std::size_t f = 0; f < cls_.fields.size(); ++f) {
        if (cls_.fields[f].is_static) continue;
        const auto value = params_count > 0 ? rng_.index(params_count)
                                            : any_value(code);
        code.push_back(field_write(f, value));
      }
    }
    const std::uint32_t length = rng_.range(4, 12);
    for (std::uint32_t i = 0; i < length; ++i) {
      emit(rng_.pick(shapes), code);
    }
    finish(method.return_type, code);
    method.code = std::move(code);
    return method;
  }

 private:
  // Locals are reused round-robin once the frame is exhausted.
  std::uint32_t fresh() {
    const std::uint32_t r = next_local_;
    next_local_ = next_local_ + 1 < registers_ ? next_local_ + 1 : params_;
    if (std::find(defined_.begin(), defined_.end(), r) == defined_.end()) {
      defined_.push_back(r);
    }
    return r;
  }

  std::uint32_t any_value(std::vector<Instruction>& code) {
    if (defined_.empty()) {
      Instruction c;
      c.opcode = Opcode::kConst;
      c.defs = {fresh()};
      code.push_back(c);
    }
    return rng_.pick(defined_);
  }

  Instruction field_write(std::size_t field, std::uint32_t value) {
    Instruction insn;
    insn.opcode =
        cls_.fields[field].is_static ? Opcode::kSput : Opcode::kIput;
    insn.uses = {value};
    insn.field = FieldRef{cls_.name, cls_.fields[field].name, FieldAccess::kWrite};
    return insn;
  }

  void emit(Shape shape, std::vector<Instruction>& code) {
    Instruction insn;
    switch (shape) {
      case Shape::kBinary: {
        const auto a = any_value(code);
        const auto b = any_value(code);
        insn.opcode = rng_.chance(0.7) ? binary_ : binary_alt_;
        insn.uses = {a, b};
        insn.defs = {fresh()};
        break;
      }
      case Shape::kUnary: {
        const auto a = any_value(code);
        insn.opcode = unary_;
        insn.uses = {a};
        insn.defs = {fresh()};
        break;
      }
      case Shape::kConst:
        insn.opcode = Opcode::kConst;
        insn.defs = {fresh()};
        break;
      case Shape::kConstString:
        if (literals_.empty()) return emit(Shape::kConst, code);
        insn.opcode = Opcode::kConstString;
        insn.defs = {fresh()};
        insn.literal = rng_.pick(literals_);
        break;
      case Shape::kMove: {
        const auto a = any_value(code);
        insn.opcode = Opcode::kMove;
        insn.uses = {a};
        insn.defs = {fresh()};
        break;
      }
      case Shape::kBranch: {
        const auto a = any_value(code);
        insn.opcode = compare_;
        insn.uses = {a};
        if (compare_ != Opcode::kIfEqz && compare_ != Opcode::kIfNez) {
          insn.uses.push_back(any_value(code));
        }
        break;
      }
      case Shape::kFieldRead: {
        if (cls_.fields.empty()) return emit(Shape::kBinary, code);
        const auto f = rng_.index(static_cast<std::uint32_t>(cls_.fields.size()));
        insn.opcode = cls_.fields[f].is_static ? Opcode::kSget : Opcode::kIget;
        insn.defs = {fresh()};
        insn.field = FieldRef{cls_.name, cls_.fields[f].name, FieldAccess::kRead};
        break;
      }
      case Shape::kFieldWrite: {
        if (cls_.fields.empty()) return emit(Shape::kUnary, code);
        const auto f = rng_.index(static_cast<std::uint32_t>(cls_.fields.size()));
        insn = field_write(f, any_value(code));
        break;
      }
      case Shape::kInvoke: {
        if (targets_.empty()) return emit(Shape::kMove, code);
        const auto& target = rng_.pick(targets_);
        insn.opcode = target.owner == cls_.name ? Opcode::kInvokeDirect
                                                : Opcode::kInvokeVirtual;
        for (std::uint32_t i = 0; i < target.arity; ++i) {
          insn.uses.push_back(any_value(code));
        }
        insn.method = MethodRef{target.owner, target.name};
        code.push_back(insn);
        if (target.returns_value) {
          Instruction result;
          result.opcode = Opcode::kMoveResult;
          result.defs = {fresh()};
          code.push_back(result);
        }
        return;
      }
      case Shape::kArray: {
        const auto a = any_value(code);
        insn.opcode = rng_.chance(0.5) ? Opcode::kArrayLength : Opcode::kAget;
        insn.uses = {a};
        if (insn.opcode == Opcode::kAget) insn.uses.push_back(any_value(code));
        insn.defs = {fresh()};
        break;
      }
      case Shape::kCheck: {
        const auto a = any_value(code);
        insn.opcode = rng_.chance(0.5) ? Opcode::kInstanceOf : Opcode::kCheckCast;
        insn.uses = {a};
        insn.defs = {fresh()};
        break;
      }
    }
    code.push_back(std::move(insn));
  }

  void finish(const std::string& ret, std::vector<Instruction>& code) {
    Instruction insn;
    if (ret == "V") {
      insn.opcode = Opcode::kReturnVoid;
    } else {
      const auto value = any_value(code);
      insn.uses = {value};
      if (ret == "J" || ret == "D") {
        insn.opcode = Opcode::kReturnWide;
      } else if (ret.size() > 1) {
        insn.opcode = Opcode::kReturnObject;
      } else {
        insn.opcode = Opcode::kReturn;
      }
    }
    code.push_back(std::move(insn));
  }

  Rng& rng_;
  const ClassDef& cls_;
  const std::vector<MethodTarget>& targets_;
  const std::vector<std::string>& literals_;
  std::vector<std::uint32_t> defined_;
  std::uint32_t next_local_ = 0;
  std::uint32_t params_ = 0;
  std::uint32_t registers_ = 0;
  Opcode binary_ = Opcode::kAdd;
  Opcode binary_alt_ = Opcode::kSub;
  Opcode unary_ = Opcode::kNeg;
  Opcode compare_ = Opcode::kIfEq;
};

const std::vector<std::string> kPrimitiveTypes = {"I", "J", "Z", "D", "F", "B"};
const std::vector<std::string> kPlatformTypes = {
    "Ljava/lang/String;", "Ljava/util/List;", "Ljava/lang/Object;",
    "Landroid/content/Context;"};

std::string random_type(Rng& rng, const std::vector<std::string>& own_classes) {
  const double roll = rng.unit();
  if (roll < 0.5 || own_classes.empty()) return rng.pick(kPrimitiveTypes);
  if (roll < 0.75) return rng.pick(kPlatformTypes);
  std::string type = class_descriptor(rng.pick(own_classes));
  if (rng.chance(0.15)) type = "[" + type;
  return type;
}

std::vector<std::string> random_params(Rng& rng,
                                       const std::vector<std::string>& own) {
  std::vector<std::string> params;
  const std::uint32_t count = rng.range(0, 3);
  for (std::uint32_t i = 0; i < count; ++i) params.push_back(random_type(rng, own));
  return params;
}

std::string random_return(Rng& rng, const std::vector<std::string>& own) {
  return rng.chance(0.35) ? "V" : random_type(rng, own);
}

std::string random_word(Rng& rng, std::size_t length) {
  static constexpr char kLetters[] = "abcdefghijklmnopqrstuvwxyz";
  std::string out;
  for (std::size_t i = 0; i < length; ++i) out += kLetters[rng.index(26)];
  return out;
}

std::vector<MethodTarget> collect_targets(const CodeModel& model) {
  std::vector<MethodTarget> out;
  for (const auto& cls : model.classes) {
    for (const auto& m : cls.methods) {
      if (m.is_constructor) continue;
      out.push_back({cls.name, m.name,
                     static_cast<std::uint32_t>(m.param_types.size()),
                     m.return_type != "V"});
    }
  }
  return out;
}

std::vector<std::string> class_names(const CodeModel& model) {
  std::vector<std::string> out;
  for (const auto& cls : model.classes) out.push_back(cls.name);
  return out;
}

std::string version_method_name() { return "getVersion"; }

// Adds a method with a fresh name to `cls` and returns its index.
std::size_t add_random_method(Rng& rng, ClassDef& cls, const CodeModel& model,
                              const std::vector<std::string>& literals) {
  const auto own = class_names(model);
  const auto targets = collect_targets(model);
  std::set<std::string> taken;
  for (const auto& m : cls.methods) taken.insert(m.name);
  std::string name;
  do {
    name = random_word(rng, 2 + rng.index(6)) + std::to_string(rng.index(100));
  } while (taken.contains(name));
  BodyBuilder builder(rng, cls, targets, literals);
  cls.methods.push_back(
      builder.build(name, false, random_params(rng, own), random_return(rng, own)));
  return cls.methods.size() - 1;
}

}  // namespace

CodeModel gen_library(const LibrarySpec& spec) {
  if (spec.name.empty() || spec.version.empty()) {
    throw Error("library spec: name and version are required");
  }
  if (spec.class_count == 0) {
    throw Error("library spec: class_count must be positive");
  }
  if (spec.min_methods > spec.max_methods || spec.min_fields > spec.max_fields) {
    throw Error("library spec: empty member range");
  }
  if (spec.edge_density < 0.0 || spec.edge_density > 1.0) {
    throw Error("library spec: edge_density must lie in [0, 1]");
  }
  if (spec.class_count == 1 && spec.edge_density > 0.0) {
    throw Error("library spec: edges need at least two classes");
  }

  Rng rng(mix64(spec.seed));
  CodeModel model;
  model.kind = ModelKind::kLibrary;
  model.name = spec.name;
  model.version = spec.version;

  const std::string root = "com/" + spec.name + "/";
  const std::vector<std::string> packages = {"", "internal/", "util/", "io/"};
  static const std::vector<std::string> kStems = {
      "Adapter", "Builder", "Reader", "Writer", "Factory", "Handler",
      "Cache",   "Parser",  "Client", "Config",  "Stream",  "Token"};

  std::vector<std::string> literals = spec.literal_pool;
  if (literals.empty()) {
    for (int i = 0; i < 6; ++i) {
      literals.push_back(spec.name + "." + random_word(rng, 5));
    }
  }

  // Skeleton: names, features, hierarchy.
  std::vector<std::size_t> interfaces;
  std::vector<std::size_t> concrete;
  for (std::uint32_t i = 0; i < spec.class_count; ++i) {
    ClassDef cls;
    cls.name = root + packages[i == 0 ? 0 : rng.index(packages.size())] +
               rng.pick(kStems) + std::to_string(i);
    if (i == 0) {
      cls.feature = Feature::kDefault;
    } else {
      const double roll = rng.unit();
      cls.feature = roll < 0.15   ? Feature::kInterface
                    : roll < 0.3  ? Feature::kAbstract
                    : roll < 0.45 ? Feature::kStatic
                                  : Feature::kDefault;
    }
    cls.superclass = "java/lang/Object";
    if (cls.feature == Feature::kInterface) {
      if (!interfaces.empty() && rng.chance(spec.edge_density)) {
        cls.interfaces.push_back(model.classes[rng.pick(interfaces)].name);
      }
      interfaces.push_back(i);
    } else {
      if (!concrete.empty() && rng.chance(spec.edge_density)) {
        cls.superclass = model.classes[rng.pick(concrete)].name;
      }
      if (!interfaces.empty() && rng.chance(spec.edge_density)) {
        cls.interfaces.push_back(model.classes[rng.pick(interfaces)].name);
      }
      concrete.push_back(i);
    }
    model.classes.push_back(std::move(cls));
  }

  const auto own = class_names(model);
  for (std::uint32_t i = 0; i < spec.class_count; ++i) {
    auto& cls = model.classes[i];
    if (cls.feature == Feature::kInterface) continue;
    const auto field_count = rng.range(spec.min_fields, spec.max_fields);
    for (std::uint32_t f = 0; f < field_count; ++f) {
      cls.fields.push_back({"f" + random_word(rng, 3) + std::to_string(f),
                            random_type(rng, own), rng.chance(0.25)});
    }
  }

  // Method shells first so bodies can invoke any method in the library.
  struct Shell {
    std::string name;
    bool ctor;
    std::vector<std::string> params;
    std::string ret;
  };
  std::vector<std::vector<Shell>> shells(spec.class_count);
  std::vector<MethodTarget> targets;
  for (std::uint32_t i = 0; i < spec.class_count; ++i) {
    const auto& cls = model.classes[i];
    const auto count = rng.range(spec.min_methods, spec.max_methods);
    for (std::uint32_t m = 0; m < count; ++m) {
      const bool ctor = m == 0 && cls.feature != Feature::kInterface &&
                        cls.feature != Feature::kAbstract;
      Shell shell{ctor ? "<init>" : "m" + random_word(rng, 4) + std::to_string(m),
                  ctor, random_params(rng, own),
                  ctor ? "V" : random_return(rng, own)};
      if (!ctor) {
        targets.push_back({cls.name, shell.name,
                           static_cast<std::uint32_t>(shell.params.size()),
                           shell.ret != "V"});
      }
      shells[i].push_back(std::move(shell));
    }
  }
  for (std::uint32_t i = 0; i < spec.class_count; ++i) {
    auto& cls = model.classes[i];
    BodyBuilder builder(rng, cls, targets, literals);
    for (auto& shell : shells[i]) {
      cls.methods.push_back(builder.build(std::move(shell.name), shell.ctor,
                                          std::move(shell.params),
                                          std::move(shell.ret)));
    }
  }

  // The version string lives in the first class.
  MethodDef version;
  version.name = version_method_name();
  version.return_type = "Ljava/lang/String;";
  version.registers = 1;
  Instruction load;
  load.opcode = Opcode::kConstString;
  load.defs = {0};
  load.literal = spec.version;
  Instruction ret;
  ret.opcode = Opcode::kReturnObject;
  ret.uses = {0};
  version.code = {load, ret};
  model.classes[0].methods.push_back(std::move(version));

  model.renumber_ordinals();
  return model;
}

std::pair<CodeModel, EditLog> derive_version(const CodeModel& lib,
                                             const VersionEdits& edits,
                                             const std::string& new_version,
                                             std::uint64_t seed) {
  Rng rng(mix64(seed ^ 0x5eed));
  CodeModel out = lib;
  EditLog log;
  const std::string old_version = lib.version.value_or("");
  out.version = new_version;
  for (auto& cls : out.classes) {
    for (auto& m : cls.methods) {
      for (auto& insn : m.code) {
        if (insn.literal && *insn.literal == old_version) {
          insn.literal = new_version;
          log.entries.push_back("version literal in " + cls.name + "." + m.name);
        }
      }
    }
  }

  for (std::uint32_t k = 0; k < edits.literals_changed; ++k) {
    std::vector<Instruction*> strings;
    for (auto& cls : out.classes) {
      for (auto& m : cls.methods) {
        for (auto& insn : m.code) {
          if (insn.literal && *insn.literal != new_version) strings.push_back(&insn);
        }
      }
    }
    if (strings.empty()) throw Error("derive_version: no literal to change");
    auto* insn = rng.pick(strings);
    insn->literal = *insn->literal + "." + random_word(rng, 3);
    log.entries.push_back("literal changed to " + *insn->literal);
  }

  for (std::uint32_t k = 0; k < edits.methods_removed; ++k) {
    std::vector<std::pair<std::size_t, std::size_t>> removable;
    for (std::size_t c = 0; c < out.classes.size(); ++c) {
      const auto& methods = out.classes[c].methods;
      for (std::size_t m = 0; m < methods.size(); ++m) {
        if (!methods[m].is_constructor &&
            methods[m].name != version_method_name()) {
          removable.emplace_back(c, m);
        }
      }
    }
    if (removable.empty()) throw Error("derive_version: no method to remove");
    const auto [c, m] = rng.pick(removable);
    auto& methods = out.classes[c].methods;
    log.entries.push_back("removed " + out.classes[c].name + "." + methods[m].name);
    methods.erase(methods.begin() + static_cast<std::ptrdiff_t>(m));
  }

  std::vector<std::string> literals;
  for (const auto& cls : out.classes) {
    for (const auto& m : cls.methods) {
      for (const auto& insn : m.code) {
        if (insn.literal && *insn.literal != new_version) literals.push_back(*insn.literal);
      }
    }
  }
  for (std::uint32_t k = 0; k < edits.methods_added; ++k) {
    std::vector<std::size_t> hosts;
    for (std::size_t c = 0; c < out.classes.size(); ++c) {
      if (out.classes[c].feature != Feature::kInterface) hosts.push_back(c);
    }
    if (hosts.empty()) throw Error("derive_version: no class to add a method to");
    const auto c = rng.pick(hosts);
    // add_random_method reads the model while extending one class.
    ClassDef cls = out.classes[c];
    const auto index = add_random_method(rng, cls, out, literals);
    log.entries.push_back("added " + cls.name + "." + cls.methods[index].name);
    out.classes[c] = std::move(cls);
  }

  if (edits.bodies_mutated > 0) {
    std::vector<Instruction*> sites;
    for (auto& cls : out.classes) {
      for (auto& m : cls.methods) {
        for (auto& insn : m.code) {
          if (is_binary(insn.opcode)) sites.push_back(&insn);
        }
      }
    }
    if (sites.size() < edits.bodies_mutated) {
      throw Error("derive_version: not enough instructions to mutate");
    }
    rng.shuffle(sites);
    for (std::uint32_t k = 0; k < edits.bodies_mutated; ++k) {
      auto* insn = sites[k];
      Opcode next = insn->opcode;
      while (next == insn->opcode) next = kBinaryOps[rng.index(kBinaryOps.size())];
      log.entries.push_back(std::string("mutated ") +
                            std::string(mnemonic(insn->opcode)) + " -> " +
                            std::string(mnemonic(next)));
      insn->opcode = next;
    }
  }

  out.renumber_ordinals();
  return {std::move(out), std::move(log)};
}

std::pair<CodeModel, GroundTruth> assemble_app(
    const std::string& app_name, const std::vector<const CodeModel*>& libs,
    std::uint32_t host_classes, std::uint64_t seed) {
  Rng rng(mix64(seed ^ 0xa77));
  CodeModel app;
  app.kind = ModelKind::kApp;
  app.name = app_name;
  GroundTruth truth;
  truth.app = app_name;

  std::set<std::string> seen_libs;
  for (const auto* lib : libs) {
    if (!seen_libs.insert(lib->name).second) {
      throw Error("assemble_app: library " + lib->name + " embedded twice");
    }
    truth.embedded.push_back({lib->name, lib->version.value_or("")});
    for (const auto& cls : lib->classes) {
      truth.class_map[{lib->name, cls.name}] = cls.name;
      app.classes.push_back(cls);
    }
  }

  std::vector<std::size_t> lib_concrete;
  std::vector<std::size_t> lib_interfaces;
  for (std::size_t i = 0; i < app.classes.size(); ++i) {
    (app.classes[i].feature == Feature::kInterface ? lib_interfaces : lib_concrete)
        .push_back(i);
  }
  auto lib_targets = collect_targets(app);

  const std::string root = "com/host/" + app_name + "/";
  const std::size_t first_host = app.classes.size();
  for (std::uint32_t h = 0; h < host_classes; ++h) {
    ClassDef cls;
    cls.name = root + "Main" + std::to_string(h);
    cls.feature = rng.chance(0.2) ? Feature::kStatic : Feature::kDefault;
    cls.superclass = "java/lang/Object";
    const double roll = rng.unit();
    if (roll < 0.35 && !lib_concrete.empty()) {
      cls.superclass = app.classes[rng.pick(lib_concrete)].name;
    } else if (roll < 0.55 && h > 0) {
      cls.superclass = app.classes[first_host + rng.index(h)].name;
    }
    if (!lib_interfaces.empty() && rng.chance(0.3)) {
      cls.interfaces.push_back(app.classes[rng.pick(lib_interfaces)].name);
    }
    const auto field_count = rng.range(0, 2);
    for (std::uint32_t f = 0; f < field_count; ++f) {
      cls.fields.push_back({"host" + std::to_string(f),
                            random_type(rng, {}), false});
    }
    app.classes.push_back(std::move(cls));
  }
  const auto own = class_names(app);
  for (std::size_t i = first_host; i < app.classes.size(); ++i) {
    auto& cls = app.classes[i];
    BodyBuilder builder(rng, cls, lib_targets, {});
    const auto count = rng.range(1, 4);
    for (std::uint32_t m = 0; m < count; ++m) {
      const bool ctor = m == 0;
      cls.methods.push_back(builder.build(
          ctor ? "<init>" : "run" + std::to_string(m), ctor,
          random_params(rng, own), ctor ? "V" : random_return(rng, own)));
    }
  }

  rng.shuffle(app.classes);
  app.renumber_ordinals();
  return {std::move(app), std::move(truth)};
}

std::string_view to_string(Transform transform) {
  switch (transform) {
    case Transform::kRename:
      return "rename";
    case Transform::kPackageFlatten:
      return "package_flatten";
    case Transform::kCfShuffle:
      return "cf_shuffle";
    case Transform::kDeadCodeInsert:
      return "dead_code_insert";
    case Transform::kDeadCodeRemove:
      return "dead_code_remove";
    case Transform::kStringEncrypt:
      return "string_encrypt";
  }
  return "rename";
}

Transform transform_from_string(std::string_view text) {
  for (const auto t :
       {Transform::kRename, Transform::kPackageFlatten, Transform::kCfShuffle,
        Transform::kDeadCodeInsert, Transform::kDeadCodeRemove,
        Transform::kStringEncrypt}) {
    if (to_string(t) == text) return t;
  }
  throw Error("unknown transform '" + std::string(text) + "'");
}

namespace {

bool overlaps(const std::vector<std::uint32_t>& a,
              const std::vector<std::uint32_t>& b) {
  for (const auto x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) return true;
  }
  return false;
}

bool pinned(const Instruction& insn) {
  return is_branch(insn.opcode) || is_return(insn.opcode) ||
         is_invoke(insn.opcode) || insn.opcode == Opcode::kMoveResult ||
         insn.opcode == Opcode::kMoveResultObject ||
         insn.opcode == Opcode::kMonitorEnter ||
         insn.opcode == Opcode::kMonitorExit ||
         (insn.field && insn.field->access == FieldAccess::kWrite);
}

bool independent(const Instruction& a, const Instruction& b) {
  if (pinned(a) || pinned(b)) return false;
  if (a.field && b.field && a.field->owner == b.field->owner &&
      a.field->name == b.field->name) {
    return false;
  }
  return !overlaps(a.defs, b.uses) && !overlaps(a.defs, b.defs) &&
         !overlaps(b.defs, a.uses);
}

void cf_shuffle(CodeModel& model, double intensity, Rng& rng) {
  for (auto& cls : model.classes) {
    for (auto& method : cls.methods) {
      auto& code = method.code;
      for (std::size_t i = 0; i + 1 < code.size(); ++i) {
        if (!rng.chance(intensity)) continue;
        if (independent(code[i], code[i + 1])) std::swap(code[i], code[i + 1]);
      }
    }
  }
}

void dead_code_insert(CodeModel& model, double intensity, Rng& rng) {
  if (intensity <= 0.0) return;
  for (auto& cls : model.classes) {
    for (auto& method : cls.methods) {
      // Parameterless methods slice to every opcode, so noise there would
      // leak into the slice.
      if (!rng.chance(intensity) || method.code.empty() ||
          method.param_types.empty()) {
        continue;
      }
      const std::uint32_t a = method.registers;
      const std::uint32_t b = method.registers + 1;
      method.registers += 2;
      Instruction c;
      c.opcode = Opcode::kConst;
      c.defs = {a};
      Instruction op;
      op.opcode = rng.chance(0.5) ? Opcode::kMul : Opcode::kXor;
      op.defs = {b};
      op.uses = {a, a};
      // Keep an invoke and its move-result adjacent.
      std::size_t pos = rng.index(static_cast<std::uint32_t>(method.code.size()));
      while (pos > 0 && is_invoke(method.code[pos - 1].opcode)) --pos;
      method.code.insert(method.code.begin() + static_cast<std::ptrdiff_t>(pos),
                         {c, op});
    }
    if (cls.feature != Feature::kInterface && rng.chance(intensity)) {
      MethodDef dead;
      dead.name = "dead" + std::to_string(cls.methods.size());
      dead.param_types = {"I"};
      dead.return_type = "I";
      dead.registers = 3;
      Instruction c;
      c.opcode = Opcode::kConst;
      c.defs = {1};
      Instruction op;
      op.opcode = Opcode::kShl;
      op.defs = {2};
      op.uses = {0, 1};
      Instruction ret;
      ret.opcode = Opcode::kReturn;
      ret.uses = {2};
      dead.code = {c, op, ret};
      cls.methods.push_back(std::move(dead));
    }
  }
}

// Intensity 1 deletes 20% of the non-constructor methods.
void dead_code_remove(CodeModel& model, double intensity, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> removable;
  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    const auto& methods = model.classes[c].methods;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      if (!methods[m].is_constructor) removable.emplace_back(c, m);
    }
  }
  const auto count = static_cast<std::size_t>(
      0.2 * std::clamp(intensity, 0.0, 1.0) *
      static_cast<double>(removable.size()));
  rng.shuffle(removable);
  removable.resize(count);
  // Erase back to front so earlier indices stay valid.
  std::sort(removable.begin(), removable.end(), std::greater<>());
  for (const auto& [c, m] : removable) {
    auto& methods = model.classes[c].methods;
    methods.erase(methods.begin() + static_cast<std::ptrdiff_t>(m));
  }
}

void string_encrypt(CodeModel& model, Rng& rng) {
  const std::string decoder = "com/obf/Decoder" + std::to_string(rng.index(1000));
  bool used = false;
  for (auto& cls : model.classes) {
    for (auto& method : cls.methods) {
      for (std::size_t i = 0; i < method.code.size(); ++i) {
        auto& insn = method.code[i];
        if (!insn.literal || insn.opcode != Opcode::kConstString) continue;
        insn.literal = "enc:" + hash128(*insn.literal).hex().substr(0, 16);
        const auto reg = insn.defs.empty() ? 0u : insn.defs.front();
        Instruction call;
        call.opcode = Opcode::kInvokeStatic;
        call.uses = {reg};
        call.method = MethodRef{decoder, "decode"};
        Instruction result;
        result.opcode = Opcode::kMoveResultObject;
        result.defs = {reg};
        method.code.insert(method.code.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                           {call, result});
        i += 2;
        used = true;
      }
    }
  }
  if (!used) return;
  ClassDef cls;
  cls.name = decoder;
  cls.feature = Feature::kDefault;
  cls.superclass = "java/lang/Object";
  MethodDef decode;
  decode.name = "decode";
  decode.param_types = {"Ljava/lang/String;"};
  decode.return_type = "Ljava/lang/String;";
  decode.registers = 3;
  Instruction len;
  len.opcode = Opcode::kArrayLength;
  len.defs = {1};
  len.uses = {0};
  Instruction mix;
  mix.opcode = Opcode::kXor;
  mix.defs = {2};
  mix.uses = {1, 1};
  Instruction ret;
  ret.opcode = Opcode::kReturnObject;
  ret.uses = {0};
  decode.code = {len, mix, ret};
  cls.methods.push_back(std::move(decode));
  model.classes.push_back(std::move(cls));
}

std::string rewrite_descriptor(const std::string& descriptor,
                               const std::map<std::string, std::string>& names) {
  std::size_t dims = 0;
  while (dims < descriptor.size() && descriptor[dims] == '[') ++dims;
  if (descriptor.size() < dims + 3 || descriptor[dims] != 'L') return descriptor;
  const std::string inner = descriptor.substr(dims + 1, descriptor.size() - dims - 2);
  const auto it = names.find(inner);
  if (it == names.end()) return descriptor;
  return std::string(dims, '[') + "L" + it->second + ";";
}

void apply_class_renaming(CodeModel& model,
                          const std::map<std::string, std::string>& names) {
  auto rename = [&names](std::string& name) {
    if (const auto it = names.find(name); it != names.end()) name = it->second;
  };
  for (auto& cls : model.classes) {
    rename(cls.name);
    if (cls.superclass) rename(*cls.superclass);
    for (auto& iface : cls.interfaces) rename(iface);
    for (auto& field : cls.fields) field.type = rewrite_descriptor(field.type, names);
    for (auto& method : cls.methods) {
      for (auto& p : method.param_types) p = rewrite_descriptor(p, names);
      method.return_type = rewrite_descriptor(method.return_type, names);
      for (auto& insn : method.code) {
        if (insn.field) rename(insn.field->owner);
        if (insn.method) rename(insn.method->owner);
      }
    }
  }
}

// Short identifiers in allocation order: a, b, ..., z, aa, ab, ...
std::string short_name(std::size_t index) {
  std::string out;
  ++index;
  while (index > 0) {
    --index;
    out.insert(out.begin(), static_cast<char>('a' + index % 26));
    index /= 26;
  }
  return out;
}

void rename_members(CodeModel& model, Rng& rng) {
  std::map<std::pair<std::string, std::string>, std::string> fields;
  std::map<std::pair<std::string, std::string>, std::string> methods;
  for (auto& cls : model.classes) {
    std::vector<std::size_t> order(cls.fields.size() + cls.methods.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::size_t next = 0;
    for (std::size_t f = 0; f < cls.fields.size(); ++f) {
      fields[{cls.name, cls.fields[f].name}] = short_name(order[next++]);
    }
    for (std::size_t m = 0; m < cls.methods.size(); ++m) {
      const auto& name = cls.methods[m].name;
      if (cls.methods[m].is_constructor) {
        ++next;
        continue;
      }
      methods[{cls.name, name}] = short_name(order[next++]);
    }
  }
  for (auto& cls : model.classes) {
    for (auto& field : cls.fields) field.name = fields.at({cls.name, field.name});
    for (auto& method : cls.methods) {
      if (!method.is_constructor) method.name = methods.at({cls.name, method.name});
      for (auto& insn : method.code) {
        if (insn.field) {
          const auto it = fields.find({insn.field->owner, insn.field->name});
          if (it != fields.end()) insn.field->name = it->second;
        }
        if (insn.method) {
          const auto it = methods.find({insn.method->owner, insn.method->name});
          if (it != methods.end()) insn.method->name = it->second;
        }
      }
    }
  }
}

std::map<std::string, std::string> rename_classes(const CodeModel& model,
                                                  bool keep_packages,
                                                  Rng& rng) {
  std::map<std::string, std::string> segments;
  std::vector<std::size_t> order(model.classes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < model.classes.size(); ++i) {
    const auto& name = model.classes[i].name;
    if (is_platform_class(name)) continue;
    std::string package;
    const auto slash = name.rfind('/');
    if (keep_packages && slash != std::string::npos) {
      std::size_t start = 0;
      while (start < slash) {
        const auto end = name.find('/', start);
        const auto segment = name.substr(start, end - start);
        auto [it, inserted] = segments.emplace(segment, "");
        if (inserted) it->second = "p" + short_name(segments.size() - 1);
        package += it->second + "/";
        start = end + 1;
      }
    }
    out[name] = package + short_name(order[i]);
  }
  return out;
}

std::map<std::string, std::string> flatten_packages(const CodeModel& model) {
  std::map<std::string, std::string> out;
  std::set<std::string> taken;
  for (const auto& cls : model.classes) {
    if (is_platform_class(cls.name)) continue;
    const auto slash = cls.name.rfind('/');
    std::string base = "o/" + (slash == std::string::npos
                                   ? cls.name
                                   : cls.name.substr(slash + 1));
    std::string candidate = base;
    for (int k = 1; taken.contains(candidate); ++k) {
      candidate = base + "_" + std::to_string(k);
    }
    taken.insert(candidate);
    out[cls.name] = candidate;
  }
  return out;
}

}  // namespace

std::pair<CodeModel, NameMap> obfuscate(const CodeModel& model,
                                        const ObfuscationConfig& config) {
  Rng rng(mix64(config.seed ^ 0x0bf));
  CodeModel out = model;
  auto level = [&config](Transform t) -> std::optional<double> {
    const auto it = config.intensity.find(t);
    if (it == config.intensity.end()) return std::nullopt;
    return it->second;
  };

  if (const auto x = level(Transform::kDeadCodeRemove)) dead_code_remove(out, *x, rng);
  if (const auto x = level(Transform::kDeadCodeInsert)) dead_code_insert(out, *x, rng);
  if (level(Transform::kStringEncrypt)) string_encrypt(out, rng);
  if (const auto x = level(Transform::kCfShuffle)) cf_shuffle(out, *x, rng);

  NameMap names;
  for (const auto& cls : out.classes) names.classes[cls.name] = cls.name;
  auto compose = [&names](const std::map<std::string, std::string>& step) {
    for (auto& [original, current] : names.classes) {
      if (const auto it = step.find(current); it != step.end()) current = it->second;
    }
  };

  if (level(Transform::kRename)) {
    rename_members(out, rng);
    const auto step = rename_classes(out, !level(Transform::kPackageFlatten), rng);
    apply_class_renaming(out, step);
    compose(step);
  }
  if (level(Transform::kPackageFlatten)) {
    const auto step = flatten_packages(out);
    apply_class_renaming(out, step);
    compose(step);
  }
  out.renumber_ordinals();
  return {std::move(out), std::move(names)};
}

void apply_name_map(GroundTruth& truth, const NameMap& names) {
  for (auto& [key, app_class] : truth.class_map) {
    if (const auto it = names.classes.find(app_class); it != names.classes.end()) {
      app_class = it->second;
    }
  }
}

std::string ground_truth_to_json(const std::vector<GroundTruth>& truths) {
  using ordered_json = nlohmann::ordered_json;
  ordered_json root;
  root["format"] = 1;
  ordered_json apps = ordered_json::array();
  for (const auto& truth : truths) {
    ordered_json app;
    app["app"] = truth.app;
    ordered_json embedded = ordered_json::array();
    for (const auto& e : truth.embedded) {
      embedded.push_back({{"library", e.library}, {"version", e.version}});
    }
    app["embedded"] = std::move(embedded);
    ordered_json class_map = ordered_json::array();
    for (const auto& [key, app_class] : truth.class_map) {
      ordered_json entry;
      entry["library"] = key.first;
      entry["lib_class"] = key.second;
      entry["app_class"] = app_class;
      class_map.push_back(std::move(entry));
    }
    app["class_map"] = std::move(class_map);
    app["transforms"] = truth.transforms;
    apps.push_back(std::move(app));
  }
  root["apps"] = std::move(apps);
  return root.dump(1) + "\n";
}

std::vector<GroundTruth> ground_truth_from_json(const std::string& text) {
  std::vector<GroundTruth> out;
  try {
    const auto root = nlohmann::json::parse(text);
    for (const auto& app : root.at("apps")) {
      GroundTruth truth;
      truth.app = app.at("app").get<std::string>();
      for (const auto& e : app.at("embedded")) {
        truth.embedded.push_back(
            {e.at("library").get<std::string>(), e.at("version").get<std::string>()});
      }
      for (const auto& e : app.at("class_map")) {
        truth.class_map[{e.at("library").get<std::string>(),
                         e.at("lib_class").get<std::string>()}] =
            e.at("app_class").get<std::string>();
      }
      if (app.contains("transforms")) {
        truth.transforms = app.at("transforms").get<std::vector<std::string>>();
      }
      out.push_back(std::move(truth));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("ground truth: ") + e.what());
  }
  return out;
}

CorpusSpec corpus_spec_from_json(const std::string& text) {
  CorpusSpec spec;
  try {
    const auto root = nlohmann::json::parse(text);
    auto get = [&root](const char* key, auto& target) {
      if (root.contains(key)) root.at(key).get_to(target);
    };
    get("libraries", spec.libraries);
    get("versions", spec.versions);
    get("apps", spec.apps);
    get("libs_per_app", spec.libs_per_app);
    get("host_classes", spec.host_classes);
    get("seed", spec.seed);
    if (root.contains("method_diffs")) {
      spec.min_method_diffs = root.at("method_diffs").at(0).get<std::uint32_t>();
      spec.max_method_diffs = root.at("method_diffs").at(1).get<std::uint32_t>();
    }
    if (root.contains("library")) {
      const auto& lib = root.at("library");
      auto lget = [&lib](const char* key, auto& target) {
        if (lib.contains(key)) lib.at(key).get_to(target);
      };
      lget("class_count", spec.library.class_count);
      lget("min_methods", spec.library.min_methods);
      lget("max_methods", spec.library.max_methods);
      lget("min_fields", spec.library.min_fields);
      lget("max_fields", spec.library.max_fields);
      lget("edge_density", spec.library.edge_density);
    }
    if (root.contains("obfuscation")) {
      for (const auto& [key, value] : root.at("obfuscation").items()) {
        spec.obfuscation.intensity[transform_from_string(key)] = value.get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("corpus spec: ") + e.what());
  }
  return spec;
}

Corpus gen_corpus(const CorpusSpec& spec) {
  if (spec.libs_per_app > spec.libraries) {
    throw Error("corpus spec: more libraries per app than libraries");
  }
  if (spec.versions == 0 || spec.min_method_diffs > spec.max_method_diffs) {
    throw Error("corpus spec: invalid version settings");
  }
  Corpus corpus;
  Rng rng(mix64(spec.seed));
  std::vector<std::vector<std::size_t>> versions_of(spec.libraries);
  for (std::uint32_t l = 0; l < spec.libraries; ++l) {
    LibrarySpec lib = spec.library;
    lib.name = "lib" + std::string(l < 10 ? "0" : "") + std::to_string(l);
    lib.version = "1.0.0";
    lib.seed = derive_seed(spec.seed, lib.name);
    CodeModel current = gen_library(lib);
    versions_of[l].push_back(corpus.libraries.size());
    corpus.libraries.push_back(current);
    for (std::uint32_t v = 1; v < spec.versions; ++v) {
      const auto diffs = rng.range(spec.min_method_diffs, spec.max_method_diffs);
      VersionEdits edits;
      for (std::uint32_t d = 0; d < diffs; ++d) {
        switch (rng.index(3)) {
          case 0:
            ++edits.methods_added;
            break;
          case 1:
            ++edits.methods_removed;
            break;
          default:
            ++edits.bodies_mutated;
            break;
        }
      }
      const std::string version = "1." + std::to_string(v) + ".0";
      auto [next, log] = derive_version(current, edits, version,
                                        derive_seed(spec.seed, lib.name, v));
      current = std::move(next);
      versions_of[l].push_back(corpus.libraries.size());
      corpus.libraries.push_back(current);
    }
  }

  std::vector<std::string> transforms;
  for (const auto& [t, x] : spec.obfuscation.intensity) {
    transforms.emplace_back(to_string(t));
  }
  for (std::uint32_t a = 0; a < spec.apps; ++a) {
    std::vector<std::size_t> libs(spec.libraries);
    for (std::size_t i = 0; i < libs.size(); ++i) libs[i] = i;
    rng.shuffle(libs);
    libs.resize(spec.libs_per_app);
    std::sort(libs.begin(), libs.end());
    std::vector<const CodeModel*> embedded;
    for (const auto l : libs) {
      embedded.push_back(&corpus.libraries[rng.pick(versions_of[l])]);
    }
    const std::string name = "app" + std::string(a < 10 ? "0" : "") + std::to_string(a);
    auto [app, truth] =
        assemble_app(name, embedded, spec.host_classes, derive_seed(spec.seed, name));
    ObfuscationConfig obf = spec.obfuscation;
    obf.seed = derive_seed(spec.seed, name, 1);
    auto [obfuscated, names] = obfuscate(app, obf);
    apply_name_map(truth, names);
    truth.transforms = transforms;
    corpus.apps.push_back(std::move(obfuscated));
    corpus.truths.push_back(std::move(truth));
  }
  return corpus;
}

}  // namespace tpld::corpus
