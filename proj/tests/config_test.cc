// Copyright 2026 The cswitch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cswitch/config.h"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "cswitch/error.h"

namespace cswitch {
namespace {

namespace fs = std::filesystem;

class ConfigFileTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "cswitch_config_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_ / "sub");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Write(const std::string& name, const std::string& text) {
    const fs::path path = dir_ / name;
    std::ofstream(path) << text;
    return path.string();
  }

  fs::path dir_;
};

TEST(ConfigTest, ParsesValuesAndComments) {
  const Config c = Config::parse_string(
      "# comment\n"
      "prompt_form = partner   # trailing\n"
      "seeds = 1, 2,3,\n"
      "\n"
      "lr = 5e-5\n"
      "flag = yes\n"
      "lr = 1e-3\n");
  EXPECT_EQ(c.get_string("prompt_form", ""), "partner");
  EXPECT_EQ(c.get_list("seeds"), (std::vector<std::string>{"1", "2", "3"}));
  EXPECT_DOUBLE_EQ(c.get_double("lr", 0.0), 1e-3);
  EXPECT_TRUE(c.get_bool("flag", false));
  EXPECT_EQ(c.get_int("missing", 42), 42);
  EXPECT_FALSE(c.has("missing"));
}

TEST(ConfigTest, ReportsLineOfBadInput) {
  try {
    Config::parse_string("a = 1\nnot a setting\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
  const Config c = Config::parse_string("n = twelve\nb = maybe\n");
  EXPECT_THROW(c.get_int("n", 0), Error);
  EXPECT_THROW(c.get_bool("b", false), Error);
}

TEST(ConfigTest, UnknownKeysAndFingerprint) {
  Config c = Config::parse_string("alpha = 1\nbeta = 2\n");
  EXPECT_NO_THROW(c.check_keys({"alpha", "beta", "gamma"}));
  try {
    c.check_keys({"alpha"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
  }
  const Config same = Config::parse_string("beta = 2\nalpha = 1\n");
  EXPECT_EQ(c.dump(), same.dump());
  EXPECT_EQ(c.fingerprint(), same.fingerprint());
  c.set("beta", "3");
  EXPECT_NE(c.fingerprint(), same.fingerprint());
}

TEST(ConfigTest, EnvironmentOverrides) {
  EXPECT_EQ(env_var_name("train.learning-rate"), "CSWITCH_TRAIN_LEARNING_RATE");
  ::setenv("CSWITCH_TRAIN_LEARNING_RATE", "0.5", 1);
  ::setenv("CSWITCH_EXTRA_KEY", "x", 1);
  Config c = Config::parse_string("train.learning-rate = 0.1\n");
  c.apply_env_overrides({"extra.key"});
  EXPECT_DOUBLE_EQ(c.get_double("train.learning-rate", 0.0), 0.5);
  EXPECT_EQ(c.get_string("extra.key", ""), "x");
  ::unsetenv("CSWITCH_TRAIN_LEARNING_RATE");
  ::unsetenv("CSWITCH_EXTRA_KEY");
}

TEST_F(ConfigFileTest, IncludesResolveRelativeToFile) {
  Write("sub/base.conf", "a = base\nb = base\n");
  const std::string top = Write("top.conf", "include sub/base.conf\nb = top\n");
  const Config c = Config::parse_file(top);
  EXPECT_EQ(c.get_string("a", ""), "base");
  EXPECT_EQ(c.get_string("b", ""), "top");
}

TEST_F(ConfigFileTest, IncludeCycleIsAnError) {
  Write("x.conf", "include y.conf\n");
  Write("y.conf", "include x.conf\n");
  try {
    Config::parse_file((dir_ / "x.conf").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("cycl"), std::string::npos);
  }
  EXPECT_THROW(Config::parse_file((dir_ / "absent.conf").string()), Error);
}

}  // namespace
}  // namespace cswitch
