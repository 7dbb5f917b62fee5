#include "tpld/code_model.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

namespace tpld {

namespace {

constexpr std::array<std::string_view, kOpcodeCount> kMnemonics = {
    "nop",
    "move",
    "move-wide",
    "move-object",
    "move-result",
    "move-result-object",
    "move-exception",
    "return-void",
    "return",
    "return-wide",
    "return-object",
    "const",
    "const-wide",
    "const-string",
    "const-class",
    "check-cast",
    "instance-of",
    "new-instance",
    "new-array",
    "array-length",
    "fill-array",
    "throw",
    "goto",
    "switch",
    "cmp",
    "if-eq",
    "if-ne",
    "if-lt",
    "if-ge",
    "if-gt",
    "if-le",
    "if-eqz",
    "if-nez",
    "aget",
    "aput",
    "iget",
    "iput",
    "sget",
    "sput",
    "invoke-virtual",
    "invoke-super",
    "invoke-direct",
    "invoke-static",
    "invoke-interface",
    "neg",
    "not",
    "add",
    "sub",
    "mul",
    "div",
    "rem",
    "and",
    "or",
    "xor",
    "shl",
    "shr",
    "ushr",
    "int-to-long",
    "int-to-float",
    "int-to-double",
    "long-to-int",
    "float-to-int",
    "double-to-int",
    "int-to-byte",
    "int-to-char",
    "monitor-enter",
    "monitor-exit",
    "unknown",
};

bool is_primitive(char c) {
  switch (c) {
    case 'V':
    case 'Z':
    case 'B':
    case 'S':
    case 'C':
    case 'I':
    case 'J':
    case 'F':
    case 'D':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string_view mnemonic(Opcode op) {
  return kMnemonics[static_cast<std::size_t>(op)];
}

std::optional<Opcode> opcode_from_mnemonic(std::string_view text) {
  const auto it = std::find(kMnemonics.begin(), kMnemonics.end(), text);
  if (it == kMnemonics.end()) {
    return std::nullopt;
  }
  return static_cast<Opcode>(it - kMnemonics.begin());
}

std::span<const std::string_view> mnemonic_table() { return kMnemonics; }

bool is_return(Opcode op) {
  return op == Opcode::kReturnVoid || op == Opcode::kReturn ||
         op == Opcode::kReturnWide || op == Opcode::kReturnObject;
}

bool is_invoke(Opcode op) {
  return op >= Opcode::kInvokeVirtual && op <= Opcode::kInvokeInterface;
}

bool is_branch(Opcode op) {
  return op == Opcode::kGoto || op == Opcode::kSwitch || op == Opcode::kThrow ||
         (op >= Opcode::kIfEq && op <= Opcode::kIfNez);
}

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kApp ? "app" : "library";
}

std::string_view to_string(Feature feature) {
  switch (feature) {
    case Feature::kDefault:
      return "default";
    case Feature::kAbstract:
      return "abstract";
    case Feature::kStatic:
      return "static";
    case Feature::kInterface:
      return "interface";
  }
  return "default";
}

std::optional<Feature> feature_from_string(std::string_view text) {
  if (text == "default") return Feature::kDefault;
  if (text == "abstract") return Feature::kAbstract;
  if (text == "static") return Feature::kStatic;
  if (text == "interface") return Feature::kInterface;
  return std::nullopt;
}

const FieldDef* ClassDef::find_field(std::string_view field_name) const {
  for (const auto& field : fields) {
    if (field.name == field_name) {
      return &field;
    }
  }
  return nullptr;
}

std::optional<std::size_t> CodeModel::find_class(
    std::string_view class_name) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i].name == class_name) {
      return i;
    }
  }
  return std::nullopt;
}

void CodeModel::renumber_ordinals() {
  for (auto& cls : classes) {
    for (std::size_t i = 0; i < cls.methods.size(); ++i) {
      cls.methods[i].ordinal = static_cast<std::uint32_t>(i);
    }
  }
}

ClassIndex::ClassIndex(const CodeModel& model) {
  by_name_.reserve(model.classes.size());
  for (std::size_t i = 0; i < model.classes.size(); ++i) {
    by_name_.emplace(model.classes[i].name, i);
  }
}

std::optional<std::size_t> ClassIndex::find(std::string_view class_name) const {
  const auto it = by_name_.find(std::string(class_name));
  if (it == by_name_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::string Diagnostic::to_string() const {
  return locus.empty() ? message : locus + ": " + message;
}

bool is_valid_type_descriptor(std::string_view d) {
  std::size_t dims = 0;
  while (dims < d.size() && d[dims] == '[') {
    ++dims;
  }
  const std::string_view base = d.substr(dims);
  if (base.empty()) {
    return false;
  }
  if (base.size() == 1) {
    if (base[0] == 'X') return true;
    return is_primitive(base[0]) && !(dims > 0 && base[0] == 'V');
  }
  return base.front() == 'L' && base.back() == ';' && base.size() > 2 &&
         base.find(';') == base.size() - 1;
}

std::vector<Diagnostic> validate(const CodeModel& model) {
  std::vector<Diagnostic> out;
  auto report = [&out](std::string locus, std::string message) {
    out.push_back({std::move(locus), std::move(message)});
  };

  if (model.name.empty()) {
    report("model", "empty model name");
  }
  if (model.kind == ModelKind::kLibrary &&
      (!model.version || model.version->empty())) {
    report("model", "library model without version");
  }

  const ClassIndex index(model);
  std::unordered_set<std::string_view> seen;
  for (const auto& cls : model.classes) {
    const std::string class_locus = "class " + cls.name;
    if (cls.name.empty()) {
      report(class_locus, "empty class name");
    }
    if (!seen.insert(cls.name).second) {
      report(class_locus, "duplicate class name");
    }
    if (cls.feature == Feature::kInterface && cls.superclass) {
      if (const auto target = index.find(*cls.superclass)) {
        if (model.classes[*target].feature != Feature::kInterface) {
          report(class_locus, "interface extends non-interface class " +
                                  *cls.superclass);
        }
      }
    }

    std::unordered_set<std::string_view> field_names;
    for (const auto& field : cls.fields) {
      if (!field_names.insert(field.name).second) {
        report(class_locus + " field " + field.name, "duplicate field name");
      }
      if (!is_valid_type_descriptor(field.type)) {
        report(class_locus + " field " + field.name,
               "invalid type descriptor '" + field.type + "'");
      }
    }

    for (std::size_t m = 0; m < cls.methods.size(); ++m) {
      const auto& method = cls.methods[m];
      const std::string method_locus = class_locus + " method " + method.name +
                                       "#" + std::to_string(m);
      if (method.ordinal != m) {
        report(method_locus, "ordinal " + std::to_string(method.ordinal) +
                                 " is not contiguous");
      }
      for (const auto& type : method.param_types) {
        if (!is_valid_type_descriptor(type) || type == "V") {
          report(method_locus, "invalid parameter type '" + type + "'");
        }
      }
      if (!is_valid_type_descriptor(method.return_type)) {
        report(method_locus,
               "invalid return type '" + method.return_type + "'");
      }
      if (method.param_types.size() > method.registers) {
        report(method_locus, "more parameters than registers");
      }
      for (std::size_t i = 0; i < method.code.size(); ++i) {
        const auto& insn = method.code[i];
        const std::string insn_locus =
            method_locus + " insn " + std::to_string(i);
        for (const auto reg : insn.defs) {
          if (reg >= method.registers) {
            report(insn_locus, "def register v" + std::to_string(reg) +
                                   " out of range");
          }
        }
        for (const auto reg : insn.uses) {
          if (reg >= method.registers) {
            report(insn_locus, "use register v" + std::to_string(reg) +
                                   " out of range");
          }
        }
        if (insn.field) {
          if (insn.field->access == FieldAccess::kWrite && insn.uses.empty()) {
            report(insn_locus, "field write without value register");
          }
          if (insn.field->access == FieldAccess::kRead && insn.defs.empty()) {
            report(insn_locus, "field read without destination register");
          }
        }
      }
    }
  }
  return out;
}

// Fuzzy types ----------------------------------------------------------------

const FuzzyConfig& default_fuzzy_config() {
  static const FuzzyConfig config;
  return config;
}

bool is_platform_class(std::string_view class_name, const FuzzyConfig& config) {
  return std::any_of(config.platform_prefixes.begin(),
                     config.platform_prefixes.end(),
                     [class_name](const std::string& prefix) {
                       return class_name.starts_with(prefix);
                     });
}

std::string fuzzy_type(std::string_view descriptor, const FuzzyConfig& config) {
  std::size_t dims = 0;
  while (dims < descriptor.size() && descriptor[dims] == '[') {
    ++dims;
  }
  const std::string_view base = descriptor.substr(dims);
  if (base.size() >= 2 && base.front() == 'L' && base.back() == ';') {
    const std::string_view class_name = base.substr(1, base.size() - 2);
    if (!is_platform_class(class_name, config)) {
      return std::string(dims, '[') + "X";
    }
  }
  return std::string(descriptor);
}

std::string fuzzy_signature(const MethodDef& method,
                            const FuzzyConfig& config) {
  std::string out = method.is_constructor ? "ctor:(" : "(";
  for (std::size_t i = 0; i < method.param_types.size(); ++i) {
    if (i > 0) out += ' ';
    out += fuzzy_type(method.param_types[i], config);
  }
  out += ')';
  out += fuzzy_type(method.return_type, config);
  return out;
}

}  // namespace tpld
