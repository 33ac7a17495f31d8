// Built-in material libraries and dataset presets for the simulator.

#include <map>

#include "specgrasp/errors.hpp"
#include "specgrasp/simulator.hpp"

namespace specgrasp {

namespace {

using Dips = std::vector<AbsorbanceDip>;
using Baseline = std::vector<ReflectanceAnchor>;

// Visible absorption giving an object its colour.
Dips color(const std::string& name) {
  static const std::map<std::string, Dips> table = {
      {"red", {{495, 55, 0.80}}},
      {"yellow", {{445, 35, 0.80}}},
      {"orange", {{470, 45, 0.80}}},
      {"lemon", {{430, 30, 0.75}}},
      {"green", {{450, 30, 0.60}, {660, 30, 0.65}}},
      {"purple", {{560, 45, 0.75}}},
      {"blue", {{600, 60, 0.70}}},
      {"white", {}},
  };
  return table.at(name);
}

Dips concat(Dips a, const Dips& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Water and sugar absorbances of real produce.
const Dips kFruitBands = {{900, 4, 0.27}, {1150, 5, 0.30}, {1370, 5, 0.32}, {1630, 5, 0.36}};
const Baseline kFruitBase = {{400, 0.30}, {700, 0.45}, {780, 0.75}, {1300, 0.72}, {1700, 0.50}};
// Painted polymer matched to the produce under visible light.
const Baseline kFauxBase = {{400, 0.31}, {700, 0.46}, {780, 0.74}, {1300, 0.73}, {1700, 0.56}};

const Dips kCellulose = {{1200, 30, 0.12}, {1490, 40, 0.28}};

}  // namespace

std::vector<ManifestItem> fruit_pairs() {
  const std::vector<std::pair<std::string, std::string>> fruits = {
      {"apple", "red"}, {"banana", "yellow"}, {"orange", "orange"},
      {"lemon", "lemon"}, {"lime", "green"},  {"grape", "purple"}};
  std::vector<ManifestItem> items;
  for (const auto& [fruit, hue] : fruits)
    items.push_back({synth_reflectance(fruit, "Organics", kFruitBase, concat(color(hue), kFruitBands)), 3, fruit});
  for (const auto& [fruit, hue] : fruits)
    items.push_back({synth_reflectance("faux_" + fruit, "Plastic", kFauxBase, color(hue)), 3, fruit});
  return items;
}

std::vector<MaterialSpectrum> object_library() {
  std::vector<MaterialSpectrum> lib;
  for (const auto& item : fruit_pairs()) lib.push_back(item.material);  // 6 Organics + 6 Plastic

  // Metal: featureless, mostly flat.
  lib.push_back(synth_reflectance("aluminum", "Metal", {{400, 0.85}, {1700, 0.92}}, {}));
  lib.push_back(synth_reflectance("steel", "Metal", {{400, 0.55}, {1700, 0.66}}, {}));
  lib.push_back(synth_reflectance("copper", "Metal", {{400, 0.35}, {580, 0.45}, {650, 0.85}, {1700, 0.95}}, {}));
  lib.push_back(synth_reflectance("brass", "Metal", {{400, 0.30}, {520, 0.60}, {700, 0.85}, {1700, 0.92}}, {}));
  lib.push_back(synth_reflectance("anodized_black", "Metal", {{400, 0.06}, {900, 0.10}, {1700, 0.18}}, {}));

  // Wood: rising brownish baseline, cellulose and lignin bands.
  const Dips wood = concat(kCellulose, {{1680, 20, 0.10}});
  lib.push_back(synth_reflectance("pine", "Wood", {{400, 0.20}, {700, 0.55}, {1000, 0.65}, {1700, 0.55}}, wood));
  lib.push_back(synth_reflectance("oak", "Wood", {{400, 0.15}, {700, 0.42}, {1000, 0.58}, {1700, 0.50}}, wood));
  lib.push_back(synth_reflectance("walnut", "Wood", {{400, 0.06}, {700, 0.20}, {1000, 0.45}, {1700, 0.42}}, wood));
  lib.push_back(synth_reflectance("birch", "Wood", {{400, 0.30}, {700, 0.62}, {1000, 0.68}, {1700, 0.58}}, wood));
  lib.push_back(synth_reflectance("bamboo", "Wood", {{400, 0.22}, {700, 0.58}, {1000, 0.64}, {1700, 0.52}}, wood));

  // Fabric: cellulose (cotton, linen, denim), keratin (wool), polyester.
  const Baseline cloth = {{400, 0.70}, {1000, 0.75}, {1700, 0.60}};
  const Dips polyester = {{1130, 15, 0.10}, {1660, 15, 0.22}};
  lib.push_back(synth_reflectance("cotton", "Fabric", cloth, kCellulose));
  lib.push_back(synth_reflectance("denim", "Fabric", cloth, concat(color("blue"), kCellulose)));
  lib.push_back(synth_reflectance("wool", "Fabric", cloth, concat(color("red"), {{1510, 25, 0.25}, {1190, 20, 0.10}})));
  lib.push_back(synth_reflectance("polyester", "Fabric", {{400, 0.08}, {700, 0.10}, {1000, 0.45}, {1700, 0.50}}, polyester));
  lib.push_back(synth_reflectance("linen", "Fabric", {{400, 0.50}, {1000, 0.70}, {1700, 0.58}}, kCellulose));

  // Foam: polyurethane / polyethylene C-H and N-H bands.
  const Dips pu = {{1200, 15, 0.15}, {1500, 25, 0.20}, {1690, 12, 0.15}};
  const Dips pe = {{1210, 12, 0.18}, {1420, 15, 0.12}, {1690, 12, 0.20}};
  lib.push_back(synth_reflectance("pu_foam", "Foam", {{400, 0.60}, {1700, 0.75}}, concat(color("yellow"), pu)));
  lib.push_back(synth_reflectance("eva_foam", "Foam", {{400, 0.08}, {900, 0.12}, {1700, 0.40}}, pe));
  lib.push_back(synth_reflectance("pe_foam", "Foam", {{400, 0.80}, {1700, 0.78}}, pe));
  lib.push_back(synth_reflectance("memory_foam", "Foam", {{400, 0.65}, {1700, 0.70}}, pu));
  lib.push_back(synth_reflectance("sponge", "Foam", {{400, 0.55}, {1700, 0.70}}, concat(color("green"), pu)));

  // Paper: cellulose with high visible reflectance.
  lib.push_back(synth_reflectance("printer_paper", "Paper", {{400, 0.85}, {1700, 0.75}}, kCellulose));
  lib.push_back(synth_reflectance("cardboard", "Paper", {{400, 0.18}, {700, 0.45}, {1000, 0.60}, {1700, 0.55}}, kCellulose));
  lib.push_back(synth_reflectance("newsprint", "Paper", {{400, 0.50}, {700, 0.62}, {1700, 0.60}}, kCellulose));
  lib.push_back(synth_reflectance("kraft", "Paper", {{400, 0.25}, {700, 0.50}, {1700, 0.60}}, kCellulose));
  lib.push_back(synth_reflectance("blue_paper", "Paper", {{400, 0.75}, {1700, 0.72}}, concat(color("blue"), kCellulose)));
  return lib;
}

GraspScenario default_scenario(std::uint64_t seed) {
  GraspScenario sc;
  sc.material = fruit_pairs().front().material;
  sc.seed = seed;
  return sc;
}

DatasetManifest preset_manifest(const std::string& name) {
  DatasetManifest m;
  if (name == "objects37" || name == "objects37-empty") {
    for (auto& mat : object_library()) m.items.push_back({std::move(mat), 3, ""});
    if (name == "objects37-empty") m.empty_samples = 3;
  } else if (name == "fruit") {
    m.items = fruit_pairs();
  } else if (name == "single") {
    m.items.push_back({fruit_pairs().front().material, 3, ""});
  } else if (name == "empty") {
    m.empty_samples = 3;
  } else {
    throw ValidationError("unknown preset '" + name + "' (objects37, objects37-empty, fruit, single, empty)");
  }
  return m;
}

}  // namespace specgrasp
