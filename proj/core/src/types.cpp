#include "uniloc/scenegen/types.hpp"

#include "uniloc/errors.hpp"

#include <string>

namespace uniloc::scenegen {

std::string_view category_key(Category c) noexcept {
    switch (c) {
    case Category::building: return "building";
    case Category::pole: return "pole";
    case Category::trafficLight: return "trafficLight";
    case Category::fence: return "fence";
    case Category::garage: return "garage";
    case Category::tree: return "tree";
    case Category::lamp: return "lamp";
    case Category::trashBin: return "trashBin";
    }
    return "building";
}

std::string_view category_words(Category c) noexcept {
    switch (c) {
    case Category::trafficLight: return "traffic light";
    case Category::trashBin: return "trash bin";
    default: return category_key(c);
    }
}

Category category_from_key(std::string_view key) {
    for (Category c : kAllCategories)
        if (category_key(c) == key) return c;
    raise(ErrorKind::parse, "unknown category '" + std::string(key) + "'");
}

std::string_view split_key(Split s) noexcept {
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "train";
}

Split split_from_key(std::string_view key) {
    if (key == "train") return Split::train;
    if (key == "val") return Split::val;
    if (key == "test") return Split::test;
    raise(ErrorKind::parse, "unknown split '" + std::string(key) + "'");
}

} // namespace uniloc::scenegen
