#pragma once

#include <string>

#include <gtest/gtest.h>

#include "bioage/error.hpp"

// Runs stmt and checks that it throws bioage::Error with the given code.
// Optionally checks that the message contains `needle`.
#define EXPECT_BIOAGE_ERROR(stmt, expected_code, ...)                                         \
  do {                                                                                         \
    try {                                                                                      \
      stmt;                                                                                    \
      ADD_FAILURE() << "expected bioage::Error from: " #stmt;                                  \
    } catch (const ::bioage::Error& e_) {                                                      \
      EXPECT_EQ(e_.code(), expected_code) << e_.what();                                        \
      for (std::string needle_ : {std::string{__VA_ARGS__}}) {                                 \
        if (!needle_.empty()) EXPECT_NE(std::string(e_.what()).find(needle_), std::string::npos) \
            << e_.what();                                                                      \
      }                                                                                        \
    }                                                                                          \
  } while (0)
