#pragma once

#include <weightopt/error.hpp>

#include <gtest/gtest.h>

#define EXPECT_ERROR_CODE(stmt, expected)                                                   \
    do {                                                                                    \
        try {                                                                               \
            (void)(stmt);                                                                   \
            ADD_FAILURE() << "expected " << weightopt::to_string(expected) << ", no throw"; \
        } catch (const weightopt::Error& e_) {                                              \
            EXPECT_EQ(e_.code(), expected) << e_.what();                                    \
        }                                                                                   \
    } while (0)
