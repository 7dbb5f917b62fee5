#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tpld/code_model.hpp"

namespace tpld {

namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr int kFormatVersion = 1;

[[noreturn]] void fail(const std::string& locus, const std::string& message) {
  throw ParseError(locus.empty() ? message : locus + ": " + message);
}

const json& require(const json& object, const char* key,
                    const std::string& locus) {
  if (!object.is_object()) {
    fail(locus, "expected an object");
  }
  const auto it = object.find(key);
  if (it == object.end()) {
    fail(locus, std::string("missing key '") + key + "'");
  }
  return *it;
}

std::string require_string(const json& object, const char* key,
                           const std::string& locus) {
  const auto& value = require(object, key, locus);
  if (!value.is_string()) {
    fail(locus, std::string("'") + key + "' must be a string");
  }
  return value.get<std::string>();
}

bool require_bool(const json& object, const char* key,
                  const std::string& locus) {
  const auto& value = require(object, key, locus);
  if (!value.is_boolean()) {
    fail(locus, std::string("'") + key + "' must be a boolean");
  }
  return value.get<bool>();
}

const json& require_array(const json& object, const char* key,
                          const std::string& locus) {
  const auto& value = require(object, key, locus);
  if (!value.is_array()) {
    fail(locus, std::string("'") + key + "' must be an array");
  }
  return value;
}

std::vector<std::string> string_list(const json& array,
                                     const std::string& locus) {
  std::vector<std::string> out;
  for (const auto& item : array) {
    if (!item.is_string()) {
      fail(locus, "expected a list of strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<std::uint32_t> register_list(const json& array,
                                         const std::string& locus) {
  if (!array.is_array()) {
    fail(locus, "register list must be an array");
  }
  std::vector<std::uint32_t> out;
  for (const auto& item : array) {
    if (!item.is_number_unsigned()) {
      fail(locus, "register index must be a non-negative integer");
    }
    out.push_back(item.get<std::uint32_t>());
  }
  return out;
}

Instruction parse_instruction(const json& node, const std::string& locus) {
  if (!node.is_array() || node.size() != 4) {
    fail(locus, "instruction must be [opcode, defs, uses, extras]");
  }
  if (!node[0].is_string()) {
    fail(locus, "opcode must be a string");
  }
  Instruction insn;
  const auto op = opcode_from_mnemonic(node[0].get<std::string>());
  if (!op) {
    fail(locus, "unknown mnemonic '" + node[0].get<std::string>() + "'");
  }
  insn.opcode = *op;
  insn.defs = register_list(node[1], locus);
  insn.uses = register_list(node[2], locus);

  const auto& extras = node[3];
  if (!extras.is_object()) {
    fail(locus, "extras must be an object");
  }
  if (const auto it = extras.find("field"); it != extras.end()) {
    if (!it->is_array() || it->size() != 3 || !(*it)[0].is_string() ||
        !(*it)[1].is_string() || !(*it)[2].is_string()) {
      fail(locus, "field ref must be [owner, name, \"r\"|\"w\"]");
    }
    const auto access = (*it)[2].get<std::string>();
    if (access != "r" && access != "w") {
      fail(locus, "field access must be \"r\" or \"w\"");
    }
    insn.field = FieldRef{(*it)[0].get<std::string>(),
                          (*it)[1].get<std::string>(),
                          access == "r" ? FieldAccess::kRead
                                        : FieldAccess::kWrite};
  }
  if (const auto it = extras.find("method"); it != extras.end()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_string() ||
        !(*it)[1].is_string()) {
      fail(locus, "method ref must be [owner, name]");
    }
    insn.method =
        MethodRef{(*it)[0].get<std::string>(), (*it)[1].get<std::string>()};
  }
  if (const auto it = extras.find("literal"); it != extras.end()) {
    if (!it->is_string()) {
      fail(locus, "literal must be a string");
    }
    insn.literal = it->get<std::string>();
  }
  for (const auto& [key, value] : extras.items()) {
    if (key != "field" && key != "method" && key != "literal") {
      fail(locus, "unknown extras key '" + key + "'");
    }
  }
  return insn;
}

MethodDef parse_method(const json& node, const std::string& locus,
                       std::uint32_t ordinal) {
  MethodDef method;
  method.name = require_string(node, "name", locus);
  const std::string here = locus + " method " + method.name;
  method.is_constructor = require_bool(node, "ctor", here);
  method.param_types =
      string_list(require_array(node, "params", here), here);
  method.return_type = require_string(node, "ret", here);
  const auto& registers = require(node, "registers", here);
  if (!registers.is_number_unsigned()) {
    fail(here, "'registers' must be a non-negative integer");
  }
  method.registers = registers.get<std::uint32_t>();
  const auto& code = require_array(node, "code", here);
  for (std::size_t i = 0; i < code.size(); ++i) {
    method.code.push_back(
        parse_instruction(code[i], here + " insn " + std::to_string(i)));
  }
  method.ordinal = ordinal;
  return method;
}

ClassDef parse_class(const json& node, std::size_t position) {
  ClassDef cls;
  cls.name = require_string(node, "name",
                            "classes[" + std::to_string(position) + "]");
  const std::string locus = "class " + cls.name;
  const auto feature = feature_from_string(require_string(node, "feature", locus));
  if (!feature) {
    fail(locus, "unknown feature");
  }
  cls.feature = *feature;
  const auto& super = require(node, "super", locus);
  if (super.is_string()) {
    cls.superclass = super.get<std::string>();
  } else if (!super.is_null()) {
    fail(locus, "'super' must be a string or null");
  }
  cls.interfaces = string_list(require_array(node, "interfaces", locus), locus);
  for (const auto& field : require_array(node, "fields", locus)) {
    FieldDef def;
    def.name = require_string(field, "name", locus);
    def.type = require_string(field, "type", locus + " field " + def.name);
    def.is_static = require_bool(field, "static", locus + " field " + def.name);
    cls.fields.push_back(std::move(def));
  }
  const auto& methods = require_array(node, "methods", locus);
  for (std::size_t i = 0; i < methods.size(); ++i) {
    cls.methods.push_back(
        parse_method(methods[i], locus, static_cast<std::uint32_t>(i)));
  }
  return cls;
}

ordered_json registers_json(const std::vector<std::uint32_t>& regs) {
  ordered_json out = ordered_json::array();
  for (const auto reg : regs) out.push_back(reg);
  return out;
}

}  // namespace

CodeModel parse_code_model(std::string_view document) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  const auto& format = require(root, "format", "model");
  if (!format.is_number_integer() || format.get<int>() != kFormatVersion) {
    fail("model", "unsupported format (expected 1)");
  }

  CodeModel model;
  const auto kind = require_string(root, "kind", "model");
  if (kind == "app") {
    model.kind = ModelKind::kApp;
  } else if (kind == "library") {
    model.kind = ModelKind::kLibrary;
  } else {
    fail("model", "kind must be \"app\" or \"library\"");
  }
  model.name = require_string(root, "name", "model");
  const auto& version = require(root, "version", "model");
  if (version.is_string()) {
    model.version = version.get<std::string>();
  } else if (!version.is_null()) {
    fail("model", "'version' must be a string or null");
  }
  const auto& classes = require_array(root, "classes", "model");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    model.classes.push_back(parse_class(classes[i], i));
  }

  const auto diagnostics = validate(model);
  if (!diagnostics.empty()) {
    throw ParseError(diagnostics.front().to_string());
  }
  return model;
}

CodeModel load_code_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_code_model(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string serialize_code_model(const CodeModel& model) {
  ordered_json root;
  root["format"] = kFormatVersion;
  root["kind"] = std::string(to_string(model.kind));
  root["name"] = model.name;
  root["version"] = model.version ? ordered_json(*model.version) : nullptr;
  ordered_json classes = ordered_json::array();
  for (const auto& cls : model.classes) {
    ordered_json c;
    c["name"] = cls.name;
    c["feature"] = std::string(to_string(cls.feature));
    c["super"] = cls.superclass ? ordered_json(*cls.superclass) : nullptr;
    c["interfaces"] = cls.interfaces;
    ordered_json fields = ordered_json::array();
    for (const auto& field : cls.fields) {
      ordered_json f;
      f["name"] = field.name;
      f["type"] = field.type;
      f["static"] = field.is_static;
      fields.push_back(std::move(f));
    }
    c["fields"] = std::move(fields);
    ordered_json methods = ordered_json::array();
    for (const auto& method : cls.methods) {
      ordered_json m;
      m["name"] = method.name;
      m["ctor"] = method.is_constructor;
      m["params"] = method.param_types;
      m["ret"] = method.return_type;
      m["registers"] = method.registers;
      ordered_json code = ordered_json::array();
      for (const auto& insn : method.code) {
        ordered_json extras = ordered_json::object();
        if (insn.field) {
          extras["field"] = {insn.field->owner, insn.field->name,
                             insn.field->access == FieldAccess::kRead ? "r"
                                                                      : "w"};
        }
        if (insn.method) {
          extras["method"] = {insn.method->owner, insn.method->name};
        }
        if (insn.literal) {
          extras["literal"] = *insn.literal;
        }
        code.push_back(ordered_json::array({std::string(mnemonic(insn.opcode)),
                                            registers_json(insn.defs),
                                            registers_json(insn.uses),
                                            std::move(extras)}));
      }
      m["code"] = std::move(code);
      methods.push_back(std::move(m));
    }
    c["methods"] = std::move(methods);
    classes.push_back(std::move(c));
  }
  root["classes"] = std::move(classes);
  return root.dump(1) + "\n";
}

}  // namespace tpld
