#pragma once

// Small built-in annotations used by `dsg selftest` and the test suites.

#include <string>

#include "dsg/codec.hpp"
#include "dsg/core_graph.hpp"

namespace dsg::fixtures {

inline constexpr const char* kMotorcyclePrompt = "a blue motorcycle parked by paint chipped doors.";

// motorcycle / blue / doors / paint chipped, edges 1->2 and 3->4
inline EncodedGraph motorcycle_annotation() {
  return {
      "1 | entity - whole (motorcycle)\n"
      "2 | attribute - color (blue, motorcycle)\n"
      "3 | entity - whole (doors)\n"
      "4 | attribute - state (paint chipped, doors)\n",
      "1 | Is there a motorcycle?\n"
      "2 | Is the motorcycle blue?\n"
      "3 | Are there doors?\n"
      "4 | Is the paint on the doors chipped?\n",
      "1 | 0\n"
      "2 | 1\n"
      "3 | 0\n"
      "4 | 3\n",
  };
}

inline SceneGraph motorcycle_graph(std::string prompt_id = "motorcycle") {
  return decode_graph(std::move(prompt_id), motorcycle_annotation());
}

// motorcycle / blue / doors / parked by, edges 1->2, 1->4, 3->4
inline EncodedGraph parked_motorcycle_annotation() {
  return {
      "1 | entity - whole (motorcycle)\n"
      "2 | attribute - color (blue, motorcycle)\n"
      "3 | entity - whole (doors)\n"
      "4 | relation - spatial (parked by, motorcycle, doors)\n",
      "1 | Is there a motorcycle?\n"
      "2 | Is the motorcycle blue?\n"
      "3 | Are there doors?\n"
      "4 | Is the motorcycle parked by the doors?\n",
      "1 | 0\n"
      "2 | 1\n"
      "3 | 0\n"
      "4 | 1,3\n",
  };
}

// cat -> black cat -> black cat sleeping (a three-node chain 1->2->3)
inline EncodedGraph chain_annotation() {
  return {
      "1 | entity - whole (cat)\n"
      "2 | attribute - color (black, cat)\n"
      "3 | attribute - state (sleeping, cat)\n",
      "1 | Is there a cat?\n"
      "2 | Is the cat black?\n"
      "3 | Is the black cat sleeping?\n",
      "1 | 0\n"
      "2 | 1\n"
      "3 | 2\n",
  };
}

inline SceneGraph chain_graph(std::string prompt_id = "chain") {
  return decode_graph(std::move(prompt_id), chain_annotation());
}

}  // namespace dsg::fixtures
