#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tpld/code_model.hpp"

namespace tpld {
namespace {

using test::klass;
using test::method;
using test::op;

const char* kMinimal = R"({"format":1,"kind":"app","name":"a","version":null,
  "classes":[{"name":"com/a/Main","feature":"default","super":null,
  "interfaces":[],"fields":[],"methods":[]}]})";

// Keys out of order, extra whitespace.
const char* kThreeClasses = R"({
  "classes": [
    {"methods": [], "fields": [], "interfaces": [], "super": null,
     "feature": "interface", "name": "com/lib/Api"},
    {"name": "com/lib/Base", "feature": "abstract", "super": "java/lang/Object",
     "interfaces": ["com/lib/Api"],
     "fields": [{"type": "I", "name": "count", "static": false}],
     "methods": [
       {"name": "<init>", "ctor": true, "params": ["I"], "ret": "V",
        "registers": 1,
        "code": [["iput", [], [0], {"field": ["com/lib/Base", "count", "w"]}],
                 ["return-void", [], [], {}]]}]},
    {"name": "com/lib/Impl", "feature": "default", "super": "com/lib/Base",
     "interfaces": [], "fields": [],
     "methods": [
       {"name": "run", "ctor": false, "params": ["Lcom/lib/Api;"],
        "ret": "Ljava/lang/String;", "registers": 3,
        "code": [["const-string", [1], [], {"literal": "2.6.0"}],
                 ["invoke-virtual", [], [0], {"method": ["com/lib/Api", "go"]}],
                 ["move-result-object", [2], [], {}],
                 ["return-object", [], [1], {}]]}]}
  ],
  "version": "2.6.0", "name": "lib", "kind": "library", "format": 1
})";

TEST(CodeModel, MinimalDocumentParses) {
  const auto model = parse_code_model(kMinimal);
  ASSERT_EQ(model.classes.size(), 1u);
  EXPECT_EQ(model.classes[0].methods.size(), 0u);
  EXPECT_EQ(model.kind, ModelKind::kApp);
  EXPECT_FALSE(model.version.has_value());
}

TEST(CodeModel, DuplicateClassNameRejected) {
  const char* doc = R"({"format":1,"kind":"app","name":"a","version":null,
    "classes":[
      {"name":"A","feature":"default","super":null,"interfaces":[],"fields":[],"methods":[]},
      {"name":"A","feature":"static","super":null,"interfaces":[],"fields":[],"methods":[]}]})";
  try {
    parse_code_model(doc);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate class name"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("class A"), std::string::npos);
  }
}

TEST(CodeModel, SchemaErrorsCarryLocus) {
  const char* missing_format = R"({"kind":"app","name":"a","version":null,"classes":[]})";
  EXPECT_THROW(parse_code_model(missing_format), ParseError);

  const char* bad_register = R"({"format":1,"kind":"app","name":"a","version":null,
    "classes":[{"name":"C","feature":"default","super":null,"interfaces":[],"fields":[],
    "methods":[{"name":"m","ctor":false,"params":[],"ret":"V","registers":1,
    "code":[["add",[0],[0,5]],["return-void",[],[]]]}]}]})";
  try {
    parse_code_model(bad_register);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("class C"), std::string::npos) << what;
    EXPECT_NE(what.find("method m"), std::string::npos) << what;
  }

  const char* bad_opcode = R"({"format":1,"kind":"app","name":"a","version":null,
    "classes":[{"name":"C","feature":"default","super":null,"interfaces":[],"fields":[],
    "methods":[{"name":"m","ctor":false,"params":[],"ret":"V","registers":1,
    "code":[["frobnicate",[],[]]]}]}]})";
  EXPECT_THROW(parse_code_model(bad_opcode), ParseError);

  EXPECT_THROW(parse_code_model("{not json"), ParseError);
  EXPECT_THROW(parse_code_model(R"({"format":2,"kind":"app","name":"a","version":null,"classes":[]})"),
               ParseError);
}

TEST(CodeModel, LibraryWithoutVersionRejected) {
  EXPECT_THROW(parse_code_model(R"({"format":1,"kind":"library","name":"l","version":null,"classes":[]})"),
               ParseError);
}

TEST(CodeModel, SerializeNormalizesKeyOrderAndLayout) {
  const auto model = parse_code_model(kThreeClasses);
  const auto text = serialize_code_model(model);
  const std::string golden = R"({
 "format": 1,
 "kind": "library",
 "name": "lib",
 "version": "2.6.0",
 "classes": [
  {
   "name": "com/lib/Api",
   "feature": "interface",
   "super": null,
   "interfaces": [],
   "fields": [],
   "methods": []
  },
  {
   "name": "com/lib/Base",
   "feature": "abstract",
   "super": "java/lang/Object",
   "interfaces": [
    "com/lib/Api"
   ],
   "fields": [
    {
     "name": "count",
     "type": "I",
     "static": false
    }
   ],
   "methods": [
    {
     "name": "<init>",
     "ctor": true,
     "params": [
      "I"
     ],
     "ret": "V",
     "registers": 1,
     "code": [
      [
       "iput",
       [],
       [
        0
       ],
       {
        "field": [
         "com/lib/Base",
         "count",
         "w"
        ]
       }
      ],
      [
       "return-void",
       [],
       [],
       {}
      ]
     ]
    }
   ]
  },
  {
   "name": "com/lib/Impl",
   "feature": "default",
   "super": "com/lib/Base",
   "interfaces": [],
   "fields": [],
   "methods": [
    {
     "name": "run",
     "ctor": false,
     "params": [
      "Lcom/lib/Api;"
     ],
     "ret": "Ljava/lang/String;",
     "registers": 3,
     "code": [
      [
       "const-string",
       [
        1
       ],
       [],
       {
        "literal": "2.6.0"
       }
      ],
      [
       "invoke-virtual",
       [],
       [
        0
       ],
       {
        "method": [
         "com/lib/Api",
         "go"
        ]
       }
      ],
      [
       "move-result-object",
       [
        2
       ],
       [],
       {}
      ],
      [
       "return-object",
       [],
       [
        1
       ],
       {}
      ]
     ]
    }
   ]
  }
 ]
}
)";
  EXPECT_EQ(text, golden);
  EXPECT_EQ(parse_code_model(text), model);
  EXPECT_EQ(serialize_code_model(parse_code_model(text)), text);
}

TEST(CodeModel, MnemonicTableRoundTrips) {
  const auto table = mnemonic_table();
  EXPECT_EQ(table.size(), kOpcodeCount);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto op = static_cast<Opcode>(i);
    EXPECT_EQ(opcode_from_mnemonic(mnemonic(op)), op);
  }
  EXPECT_FALSE(opcode_from_mnemonic("no-such-op").has_value());
}

CodeModel valid_fixture() {
  auto c = klass("com/a/C");
  c.fields.push_back({"f", "I", false});
  c.methods.push_back(method("set", {"I"}, "V", 1,
                             {test::write_field(0, "com/a/C", "f"),
                              op(Opcode::kReturnVoid)}));
  c.methods.push_back(method("get", {}, "I", 1,
                             {test::read_field(0, "com/a/C", "f"),
                              op(Opcode::kReturn, {}, {0})}));
  return test::app("a", {c});
}

TEST(Validate, ValidFixtureHasNoDiagnostics) {
  EXPECT_TRUE(validate(valid_fixture()).empty());
}

TEST(Validate, WriteWithoutValueRegister) {
  auto model = valid_fixture();
  model.classes[0].methods[0].code[0].uses.clear();
  const auto diags = validate(model);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_NE(diags[0].message.find("field write"), std::string::npos);
}

TEST(Validate, ThreeSeededDefectsGiveThreeDiagnostics) {
  auto model = valid_fixture();
  model.classes[0].methods[1].code[0].defs = {7};    // register out of range
  model.classes[0].methods[1].ordinal = 5;           // ordinal gap
  model.classes[0].fields.push_back({"f", "J", false});  // duplicate field
  EXPECT_EQ(validate(model).size(), 3u);
}

TEST(Validate, InterfaceMayNotExtendClass) {
  auto base = klass("com/a/Base");
  auto iface = klass("com/a/I", Feature::kInterface, "com/a/Base");
  EXPECT_EQ(validate(test::app("a", {base, iface})).size(), 1u);
  auto parent = klass("com/a/P", Feature::kInterface);
  auto child = klass("com/a/I", Feature::kInterface, "com/a/P");
  EXPECT_TRUE(validate(test::app("a", {parent, child})).empty());
}

TEST(Fuzzy, SignatureExamples) {
  EXPECT_EQ(fuzzy_signature(method("m", {"I"}, "V", 1, {})), "(I)V");
  EXPECT_EQ(fuzzy_signature(method("m", {"Lcom/a/B;", "I"}, "Lcom/a/C;", 2, {})),
            "(X I)X");
  EXPECT_EQ(fuzzy_signature(method("m", {"Ljava/lang/String;"}, "V", 1, {})),
            "(Ljava/lang/String;)V");
  EXPECT_EQ(fuzzy_signature(method("<init>", {"[[Lcom/a/B;"}, "V", 1, {}, true)),
            "ctor:([[X)V");
}

TEST(Fuzzy, PlatformPrefixesAreConfigurable) {
  FuzzyConfig config;
  config.platform_prefixes = {"org/"};
  EXPECT_EQ(fuzzy_type("Lorg/x/Y;", config), "Lorg/x/Y;");
  EXPECT_EQ(fuzzy_type("Ljava/lang/String;", config), "X");
  EXPECT_EQ(fuzzy_type("Landroidx/core/A;"), "Landroidx/core/A;");
  EXPECT_EQ(fuzzy_type("Lkotlin/Unit;"), "Lkotlin/Unit;");
}

TEST(Fuzzy, IdempotentAndRenameInvariant) {
  const std::vector<std::string> types = {"I", "[J", "Lcom/a/B;", "[[Lcom/q/R;",
                                          "Ljavax/x/Y;", "Landroid/os/Bundle;", "X"};
  for (const auto& t : types) {
    const auto once = fuzzy_type(t);
    EXPECT_EQ(fuzzy_type(once), once) << t;
  }
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::string name = "com/";
    for (int i = 0; i < 6; ++i) name += static_cast<char>('a' + rng.index(26));
    const auto m1 = method("m", {"Lcom/a/B;", "I"}, "[Lcom/a/B;", 2, {});
    const auto m2 = method("m", {"L" + name + ";", "I"}, "[L" + name + ";", 2, {});
    EXPECT_EQ(fuzzy_signature(m1), fuzzy_signature(m2));
  }
}

}  // namespace
}  // namespace tpld
