#pragma once

#include <bitset>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tpld {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by parse_code_model. The message carries the class/method locus.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Canonical, ISA-neutral mnemonic table. Extractors map real bytecode onto
// these; anything unmappable becomes `unknown`.
enum class Opcode : std::uint8_t {
  kNop,
  kMove,
  kMoveWide,
  kMoveObject,
  kMoveResult,
  kMoveResultObject,
  kMoveException,
  kReturnVoid,
  kReturn,
  kReturnWide,
  kReturnObject,
  kConst,
  kConstWide,
  kConstString,
  kConstClass,
  kCheckCast,
  kInstanceOf,
  kNewInstance,
  kNewArray,
  kArrayLength,
  kFillArray,
  kThrow,
  kGoto,
  kSwitch,
  kCmp,
  kIfEq,
  kIfNe,
  kIfLt,
  kIfGe,
  kIfGt,
  kIfLe,
  kIfEqz,
  kIfNez,
  kAget,
  kAput,
  kIget,
  kIput,
  kSget,
  kSput,
  kInvokeVirtual,
  kInvokeSuper,
  kInvokeDirect,
  kInvokeStatic,
  kInvokeInterface,
  kNeg,
  kNot,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kRem,
  kAnd,
  kOr,
  kXor,
  kShl,
  kShr,
  kUshr,
  kIntToLong,
  kIntToFloat,
  kIntToDouble,
  kLongToInt,
  kFloatToInt,
  kDoubleToInt,
  kIntToByte,
  kIntToChar,
  kMonitorEnter,
  kMonitorExit,
  kUnknown,
};

inline constexpr std::size_t kOpcodeCount =
    static_cast<std::size_t>(Opcode::kUnknown) + 1;

using OpcodeSet = std::bitset<kOpcodeCount>;

std::string_view mnemonic(Opcode op);
std::optional<Opcode> opcode_from_mnemonic(std::string_view text);
std::span<const std::string_view> mnemonic_table();

bool is_return(Opcode op);
bool is_invoke(Opcode op);
bool is_branch(Opcode op);

enum class ModelKind { kApp, kLibrary };
enum class Feature { kDefault, kAbstract, kStatic, kInterface };
enum class FieldAccess { kRead, kWrite };

std::string_view to_string(ModelKind kind);
std::string_view to_string(Feature feature);
std::optional<Feature> feature_from_string(std::string_view text);

struct FieldRef {
  std::string owner;
  std::string name;
  FieldAccess access = FieldAccess::kRead;

  bool operator==(const FieldRef&) const = default;
};

// Arguments of an invoke are the instruction's use registers, in order.
struct MethodRef {
  std::string owner;
  std::string name;

  bool operator==(const MethodRef&) const = default;
};

struct Instruction {
  Opcode opcode = Opcode::kNop;
  std::vector<std::uint32_t> defs;
  std::vector<std::uint32_t> uses;
  std::optional<FieldRef> field;
  std::optional<MethodRef> method;
  std::optional<std::string> literal;

  bool operator==(const Instruction&) const = default;
};

// Parameter i arrives in register i. `registers` bounds every register index
// used by the method body.
struct MethodDef {
  std::string name;
  bool is_constructor = false;
  std::vector<std::string> param_types;
  std::string return_type = "V";
  std::uint32_t registers = 0;
  std::vector<Instruction> code;
  std::uint32_t ordinal = 0;

  bool operator==(const MethodDef&) const = default;
};

// `type` holds the raw type descriptor; fuzzy_type() derives the token.
struct FieldDef {
  std::string name;
  std::string type;
  bool is_static = false;

  bool operator==(const FieldDef&) const = default;
};

struct ClassDef {
  std::string name;
  Feature feature = Feature::kDefault;
  std::optional<std::string> superclass;
  std::vector<std::string> interfaces;
  std::vector<FieldDef> fields;
  std::vector<MethodDef> methods;

  const FieldDef* find_field(std::string_view field_name) const;
  bool operator==(const ClassDef&) const = default;
};

struct CodeModel {
  ModelKind kind = ModelKind::kApp;
  std::string name;
  std::optional<std::string> version;
  std::vector<ClassDef> classes;

  // Index of the class with this name, or nullopt. Linear in the number of
  // classes; hot paths go through ClassIndex instead.
  std::optional<std::size_t> find_class(std::string_view class_name) const;

  // Reassigns method ordinals to their positions within each class.
  void renumber_ordinals();

  bool operator==(const CodeModel&) const = default;
};

class ClassIndex {
 public:
  explicit ClassIndex(const CodeModel& model);
  std::optional<std::size_t> find(std::string_view class_name) const;

 private:
  std::unordered_map<std::string, std::size_t> by_name_;
};

struct Diagnostic {
  std::string locus;
  std::string message;

  std::string to_string() const;
};

std::vector<Diagnostic> validate(const CodeModel& model);

CodeModel parse_code_model(std::string_view document);
CodeModel load_code_model(const std::string& path);
std::string serialize_code_model(const CodeModel& model);

// Fuzzy types -------------------------------------------------------------

struct FuzzyConfig {
  std::vector<std::string> platform_prefixes{"java/", "javax/", "android/",
                                             "androidx/", "kotlin/"};
};

const FuzzyConfig& default_fuzzy_config();

bool is_platform_class(std::string_view class_name,
                       const FuzzyConfig& config = default_fuzzy_config());

// Primitive and platform types are kept verbatim; every other reference type
// collapses to `X`, keeping array dimensions as a prefix.
std::string fuzzy_type(std::string_view descriptor,
                       const FuzzyConfig& config = default_fuzzy_config());

// `(<params>)<ret>`, params separated by a single space; constructors carry a
// `ctor:` prefix.
std::string fuzzy_signature(const MethodDef& method,
                            const FuzzyConfig& config = default_fuzzy_config());

bool is_valid_type_descriptor(std::string_view descriptor);

}  // namespace tpld
