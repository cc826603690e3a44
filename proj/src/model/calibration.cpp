#include "enerlyze/calibration.hpp"

#include <utility>

#include "enerlyze/lang/parser.hpp"

namespace enerlyze {
namespace {

// (operation, kernel statements). Every kernel works on globals so that it
// adds as few companion operations as possible.
const std::vector<std::pair<std::string, std::string>>& kernels() {
  static const std::vector<std::pair<std::string, std::string>> k = {
      {"Addition_int_int", "gi = gi + 3;"},
      {"Addition_int_float", "gf = gi + gf;"},
      {"Addition_float_int", "gf = gf + gi;"},
      {"Addition_float_float", "gf = gf + 0.5;"},
      {"Subtraction_int_int", "gi = gi - 2;"},
      {"Subtraction_int_float", "gf = gi - gf;"},
      {"Subtraction_float_int", "gf = gf - gi;"},
      {"Subtraction_float_float", "gf = gf - 0.25;"},
      {"Multi_int_int", "gi = gi * 3;"},
      {"Multi_int_float", "gf = gi * gf;"},
      {"Multi_float_int", "gf = gf * gi;"},
      {"Multi_float_float", "gf = gf * 0.5;"},
      {"Division_int_int", "gi = gi / 7;"},
      {"Division_int_float", "gf = gi / 3.0;"},
      {"Division_float_int", "gf = gf / 3;"},
      {"Division_float_float", "gf = gf / 1.5;"},
      {"Increment", "gi++;"},
      {"Decrement", "gi--;"},
      {"Negation_int", "gi = -gi;"},
      {"Negation_float", "gf = -gf;"},
      {"Less_int_int", "gb = gi < 5;"},
      {"Less_int_float", "gb = gi < gf;"},
      {"Less_float_int", "gb = gf < gi;"},
      {"Less_float_float", "gb = gf < 0.5;"},
      {"LessEqual_int_int", "gb = gi <= 5;"},
      {"LessEqual_int_float", "gb = gi <= gf;"},
      {"LessEqual_float_int", "gb = gf <= gi;"},
      {"LessEqual_float_float", "gb = gf <= 0.5;"},
      {"Greater_int_int", "gb = gi > 5;"},
      {"Greater_int_float", "gb = gi > gf;"},
      {"Greater_float_int", "gb = gf > gi;"},
      {"Greater_float_float", "gb = gf > 0.5;"},
      {"GreaterEqual_int_int", "gb = gi >= 5;"},
      {"GreaterEqual_int_float", "gb = gi >= gf;"},
      {"GreaterEqual_float_int", "gb = gf >= gi;"},
      {"GreaterEqual_float_float", "gb = gf >= 0.5;"},
      {"Equal_int_int", "gb = gi == 5;"},
      {"Equal_int_float", "gb = gi == gf;"},
      {"Equal_float_int", "gb = gf == gi;"},
      {"Equal_float_float", "gb = gf == 0.5;"},
      {"Equal_bool_bool", "gb = gb == gt;"},
      {"Equal_Object_Object", "gb = gc == gc2;"},
      {"Equal_Object_null", "gb = gc == null;"},
      {"Equal_null_Object", "gb = null == gc;"},
      {"Equal_int[]_int[]", "gb = gai == gai2;"},
      {"Equal_int[]_null", "gb = gai == null;"},
      {"Equal_null_int[]", "gb = null == gai;"},
      {"Equal_float[]_float[]", "gb = gaf == gaf2;"},
      {"Equal_float[]_null", "gb = gaf == null;"},
      {"Equal_null_float[]", "gb = null == gaf;"},
      {"Equal_char[]_char[]", "gb = gac == gac2;"},
      {"Equal_char[]_null", "gb = gac == null;"},
      {"Equal_null_char[]", "gb = null == gac;"},
      {"Equal_null_null", "gb = null == null;"},
      {"And", "gb = gb && gt;"},
      {"Or", "gb = gb || gt;"},
      {"Not", "gb = !gb;"},
      {"BitAnd_int_int", "gi = gi & 255;"},
      {"BitOr_int_int", "gi = gi | 1;"},
      {"SignedShiftLeft_int_int", "gi = gi << 1;"},
      {"SignedShiftRight_int_int", "gi = gi >> 1;"},
      {"ArrayReference", "gi = gai[3];"},
      {"MethodInvocation", "nop();"},
      {"BlockGoto_if", "if (gt) {}"},
      {"BlockGoto_for", "for (int i = 0; i < 2; i++) {}"},
      {"BlockGoto_while", "gw = 0;\nwhile (gw < 2) {\n  gw++;\n}"},
      {"BlockGoto_switch", "switch (gw) {\n  case 2: {}\n  default: {}\n}"},
      {"FieldReference", "gf = gc.f;"},
      {"Parameter_int", "takeInt(gi);"},
      {"Parameter_float", "takeFloat(gf);"},
      {"Parameter_bool", "takeBool(gb);"},
      {"Parameter_Object", "takeObject(gc);"},
      {"Parameter_int[]", "takeInts(gai);"},
      {"Parameter_float[]", "takeFloats(gaf);"},
      {"Parameter_char[]", "takeChars(gac);"},
      {"Return_int", "gi = giveInt();"},
      {"Return_float", "gf = giveFloat();"},
      {"Return_bool", "gb = giveBool();"},
      {"Return_Object", "gc2 = giveObject();"},
      {"Return_int[]", "gai2 = giveInts();"},
      {"Return_float[]", "gaf2 = giveFloats();"},
      {"Return_char[]", "gac2 = giveChars();"},
      {"Return_void", "giveNothing();"},
      {"Assign_int_int", "gi = 1;"},
      {"Assign_float_float", "gf = 1.5;"},
      {"Assign_bool_bool", "gb = true;"},
      {"Assign_Object_Object", "gc2 = gc;"},
      {"Assign_int[]_int[]", "gai2 = gai;"},
      {"Assign_float[]_float[]", "gaf2 = gaf;"},
      {"Assign_char[]_char[]", "gac2 = gac;"},
      {"Assign_float_int", "gf = gi;"},
      {"Assign_Object_null", "gtmp = null;"},
      {"Assign_int[]_null", "gtai = null;"},
      {"Assign_float[]_null", "gtaf = null;"},
      {"Assign_char[]_null", "gtac = null;"},
      {"Declaration_int", "int d = 1;"},
      {"Declaration_float", "float d = 1.5;"},
      {"Declaration_bool", "bool d = true;"},
      {"Declaration_Object", "Cell d = gc;"},
      {"Declaration_int[]", "int[] d = gai;"},
      {"Declaration_float[]", "float[] d = gaf;"},
      {"Declaration_char[]", "char[] d = gac;"},
      {"New_Object", "gtmp = new Cell();"},
      {"New_int[]", "gtai = new int[4];"},
      {"New_float[]", "gtaf = new float[4];"},
      {"New_char[]", "gtac = new char[4];"},
      {"Conversion_int_float", "gf = (float) gi;"},
      {"Conversion_float_int", "gi = (int) gf;"},
      {"Library_list_new", "gtmp = list_new();"},
      {"Library_list_add", "list_add(glist, gc);"},
      {"Library_list_get", "gc2 = list_get(glist, 0);"},
      {"Library_list_set", "list_set(glist, 0, gc);"},
      {"Library_list_size", "gi = list_size(glist);"},
      {"Library_buffer_new", "gtmp = buffer_new(4);"},
      {"Library_buffer_put", "buffer_clear(gsink);\nbuffer_put(gsink, 1.5);"},
      {"Library_buffer_get", "gf = buffer_get(gsrc, 2);"},
      {"Library_buffer_set", "buffer_set(gsrc, 1, 2.5);"},
      {"Library_buffer_limit", "gi = buffer_limit(gsrc);"},
      {"Library_buffer_position", "gi = buffer_position(gsrc);"},
      {"Library_buffer_clear", "buffer_clear(gsink);"},
      {"Library_buffer_bulk_put", "buffer_clear(gdst);\nbuffer_bulk_put(gdst, gsrc);"},
      {"Library_math_sqrt", "gf = math_sqrt(2.0);"},
      {"Library_math_sin", "gf = math_sin(gf);"},
      {"Library_math_cos", "gf = math_cos(gf);"},
      {"Library_math_abs", "gf = math_abs(gf);"},
      {"Library_math_max", "gf = math_max(gf, 0.5);"},
      {"Library_math_min", "gf = math_min(gf, 0.5);"},
      {"Library_math_floor", "gi = math_floor(gf);"},
      {"Library_math_imax", "gi = math_imax(gi, 3);"},
      {"Library_math_imin", "gi = math_imin(gi, 3);"},
      {"Library_math_iabs", "gi = math_iabs(gi);"},
      {"Library_array_length", "gi = array_length(gai);"},
      {"Library_emit", "emit(gi);"},
  };
  return k;
}

constexpr const char* kPrelude = R"(// Calibration program: one kernel per energy operation.

record Cell {
  int a;
  float f;
}

global int gi;
global float gf;
global bool gb;
global bool gt;
global int gw;
global Cell gc;
global Cell gc2;
global Object gtmp;
global int[] gai;
global int[] gai2;
global int[] gtai;
global float[] gaf;
global float[] gaf2;
global float[] gtaf;
global char[] gac;
global char[] gac2;
global char[] gtac;
global Object glist;
global Object gsrc;
global Object gdst;
global Object gsink;

void nop() {}
void takeInt(int x) {}
void takeFloat(float x) {}
void takeBool(bool x) {}
void takeObject(Cell x) {}
void takeInts(int[] x) {}
void takeFloats(float[] x) {}
void takeChars(char[] x) {}
int giveInt() {
  return 7;
}
float giveFloat() {
  return 0.75;
}
bool giveBool() {
  return true;
}
Cell giveObject() {
  return gc;
}
int[] giveInts() {
  return gai;
}
float[] giveFloats() {
  return gaf;
}
char[] giveChars() {
  return gac;
}
void giveNothing() {
  return;
}

void init() {
  gt = true;
  gf = 0.5;
  gc = new Cell();
  gc2 = new Cell();
  gai = new int[8];
  gai2 = new int[8];
  gaf = new float[8];
  gaf2 = new float[8];
  gac = new char[8];
  gac2 = new char[8];
  glist = list_new();
  list_add(glist, gc);
  gsrc = buffer_new(8);
  for (int k = 0; k < 8; k++) {
    buffer_put(gsrc, 0.5);
  }
  gdst = buffer_new(8);
  gsink = buffer_new(64);
}

// Runs the kernel chosen by the current input; each case mixes a few kernels
// in random proportions.
void frame(int kernel) {
  switch (kernel) {
)";

}  // namespace

std::vector<std::string> calibration_kernels() {
  std::vector<std::string> out;
  for (const auto& [op, code] : kernels()) out.push_back(op);
  return out;
}

std::string calibration_source() {
  std::string src = kPrelude;
  int index = 0;
  for (const auto& [op, code] : kernels()) {
    src += "    case " + std::to_string(index++) + ": {\n";
    std::size_t start = 0;
    while (start < code.size()) {
      const auto nl = code.find('\n', start);
      const auto line = code.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
      src += "      " + line + "\n";
      if (nl == std::string::npos) break;
      start = nl + 1;
    }
    src += "    }\n";
  }
  src += "  }\n}\n";
  return src;
}

CaseDesign calibration_design(std::uint64_t seed, int n_cases) {
  CaseDesign d;
  d.n_cases = n_cases;
  d.seed = seed;
  d.policy = AblationPolicy::CoverOnce;
  d.frame_budget = 200;
  d.events_per_case = 6;
  d.int_max = static_cast<std::int64_t>(kernels().size()) - 1;
  return d;
}

Dataset calibration_dataset(const CostTable& table, const SimConfig& sim, const CaseDesign& design, int replicates,
                            int jobs) {
  const auto cp = lang::check(lang::parse_source(calibration_source()));
  const auto bm = divide_blocks(cp);
  const auto dict = build_dictionary(cp, bm);
  auto cases = generate_cases(cp, bm, design);
  for (auto& c : cases) c.case_id = "cal_" + c.case_id;
  RunConfig cfg;
  cfg.entry_method = design.entry_method;
  cfg.seconds_per_step = sim.seconds_per_step;
  const auto logs = run_all(cp, bm, cases, cfg, jobs);
  return make_dataset(logs, dict, measure_cases(logs, dict, table, sim, replicates, jobs));
}

}  // namespace enerlyze
