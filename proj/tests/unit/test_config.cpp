#include "frc/config.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "support/random.hpp"

using namespace frc;
using nlohmann::json;

namespace {

json box_doc() {
  return json::parse(R"({
    "name": "cube",
    "seed": 3,
    "mesh": {"box": {"size": [1, 2, 3], "divisions": [1, 2, 3], "region": 0}},
    "materials": {
      "regions": {"0": {"type": "matrix", "E": 3000, "plastic": false}},
      "interface": {"ft": "inf", "Gf": 0.01}
    },
    "bc": "linear_displacement",
    "program": {"control": ["xx"], "segments": [{"strain": {"xx": 0.01}, "steps": 4},
                                                 {"strain": {"xx": 0.0}, "steps": 2}]},
    "solver": {"rtol": 1e-7, "max_bisections": 3},
    "output": {"dir": "somewhere", "vtk": false}
  })");
}

void expect_config_error(const json& doc, const std::string& fragment) {
  try {
    parse_config(doc, "/base");
    FAIL() << "accepted: " << doc.dump();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

// Every object reachable from `j`, addressed by JSON pointer.
void objects(const json& j, const json::json_pointer& at, std::vector<json::json_pointer>& out) {
  if (j.is_object()) {
    out.push_back(at);
    for (const auto& [k, v] : j.items()) objects(v, at / k, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) objects(j[i], at / i, out);
  }
}

}  // namespace

TEST(Config, BoxDocument) {
  const RunConfig c = parse_config(box_doc(), "/base");
  EXPECT_EQ(c.name, "cube");
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.mesh.kind, MeshSource::Kind::Box);
  EXPECT_EQ(c.mesh.box.divisions, (std::array<int, 3>{1, 2, 3}));
  EXPECT_DOUBLE_EQ(c.mesh.box.box.hi(2), 3.0);
  EXPECT_EQ(c.bc, BCKind::LinearDisplacement);
  EXPECT_FALSE(c.materials.regions.at(0).matrix.plastic);
  EXPECT_DOUBLE_EQ(c.materials.regions.at(0).matrix.E, 3000.0);
  EXPECT_DOUBLE_EQ(c.materials.regions.at(0).matrix.nu, MatrixParams::epoxy().nu);
  EXPECT_TRUE(c.materials.cohesive.tied());
  ASSERT_EQ(c.program.segments.size(), 2u);
  EXPECT_EQ(c.program.total_steps(), 6);
  EXPECT_TRUE(c.program.mask[0]);
  EXPECT_FALSE(c.program.mask[1]);
  EXPECT_DOUBLE_EQ(c.solver.rtol, 1e-7);
  EXPECT_EQ(c.solver.max_bisections, 3);
  EXPECT_FALSE(c.output.vtk);
}

TEST(Config, UnknownKeysRejectedEverywhere) {
  // property: one unknown key in any object of a valid document is an error
  const json base = box_doc();
  std::vector<json::json_pointer> where;
  objects(base, json::json_pointer(), where);
  testing_support::Rng rng(5);
  for (const auto& ptr : where) {
    // region tables are keyed by region id, so a stray key there is a bad id
    if (ptr.to_string() == "/materials/regions") continue;
    json doc = base;
    const std::string key = "typo" + std::to_string(rng.integer(0, 999));
    doc[ptr][key] = rng.uniform(0, 1);
    expect_config_error(doc, key);
  }
}

TEST(Config, MeshSourceExactlyOne) {
  json doc = box_doc();
  doc["mesh"]["file"] = "a.mesh";
  expect_config_error(doc, "exactly one");
  doc["mesh"].erase("file");
  doc["mesh"].erase("box");
  expect_config_error(doc, "exactly one");
}

TEST(Config, TypedFieldsChecked) {
  json doc = box_doc();
  doc["seed"] = "three";
  expect_config_error(doc, "seed");
  doc = box_doc();
  doc["bc"] = "sticky";
  expect_config_error(doc, "bc");
  doc = box_doc();
  doc["program"]["segments"][0]["strain"]["xq"] = 0.1;
  expect_config_error(doc, "xq");
  doc = box_doc();
  doc["materials"]["regions"]["0"]["E"] = "inf";
  expect_config_error(doc, "E");
  doc = box_doc();
  doc["materials"]["regions"]["0"]["nu"] = 0.5;
  expect_config_error(doc, "materials");
}

TEST(Config, RelativeMeshPathResolvedAgainstConfigDir) {
  json doc = box_doc();
  doc["mesh"] = {{"file", "../meshes/cell.mesh"}};
  const RunConfig c = parse_config(doc, "/data/configs");
  EXPECT_EQ(c.mesh.file.lexically_normal(), std::filesystem::path("/data/meshes/cell.mesh"));
  EXPECT_EQ(std::filesystem::path(c.resolved["mesh"]["file"].get<std::string>()).lexically_normal(),
            std::filesystem::path("/data/meshes/cell.mesh"));
}

TEST(ReadJson, CommentsAllowedSyntaxErrorsReported) {
  const auto dir = std::filesystem::temp_directory_path() / "frc_test_config";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "ok.json") << "{\n  // a comment\n  \"a\": 1\n}\n";
  std::ofstream(dir / "bad.json") << "{\"a\": 1,,}";
  EXPECT_EQ(read_json(dir / "ok.json")["a"], 1);
  EXPECT_THROW(read_json(dir / "bad.json"), ConfigError);
  EXPECT_THROW(read_json(dir / "missing.json"), ConfigError);
}

TEST(SetPath, ReplacesAndAdds) {
  json doc = box_doc();
  set_path(doc, "materials.interface.Gf", 0.5);
  EXPECT_EQ(doc["materials"]["interface"]["Gf"], 0.5);
  set_path(doc, "materials.interface.beta", 2);
  EXPECT_EQ(doc["materials"]["interface"]["beta"], 2);
  EXPECT_THROW(set_path(doc, "materials.nowhere.Gf", 1), ConfigError);
  EXPECT_THROW(set_path(doc, "name.x", 1), ConfigError);
  EXPECT_THROW(set_path(doc, "", 1), ConfigError);
}

TEST(ParseValue, Kinds) {
  EXPECT_EQ(parse_value("inf"), json("inf"));
  EXPECT_TRUE(parse_value("3").is_number_integer());
  EXPECT_DOUBLE_EQ(parse_value("0.25").get<double>(), 0.25);
  EXPECT_DOUBLE_EQ(parse_value("1e-3").get<double>(), 1e-3);
  EXPECT_EQ(parse_value("true"), json(true));
  EXPECT_EQ(parse_value("false"), json(false));
  EXPECT_EQ(parse_value("periodic"), json("periodic"));
}

TEST(Config, ThreadsReachTheSolverWithOrWithoutSolverSection) {
  json doc = box_doc();
  doc["threads"] = 3;
  EXPECT_EQ(parse_config(doc, "/base").solver.threads, 3);
  doc.erase("solver");
  EXPECT_EQ(parse_config(doc, "/base").solver.threads, 3);
  doc["threads"] = 0;
  expect_config_error(doc, "threads");
}
