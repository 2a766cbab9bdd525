// Copyright 2026 The guiagent Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include "guiagent/mockenv.hpp"

// Small scripted phone apps used by the tests, fixtures and demos.
namespace guiagent::mockenv::apps {

namespace detail {

inline SceneElement el(std::string id, std::string role, std::string label, NormBox box, bool editable = false,
                       std::string text = {}) {
    return {std::move(id), std::move(role), std::move(label), box, editable, std::move(text)};
}

inline Rule on(std::string screen, ActionName a, std::optional<std::string> element,
               std::optional<std::string> next, std::vector<Mutation> muts = {}) {
    Rule r;
    r.screen = std::move(screen);
    r.trigger.actions = {a};
    r.trigger.element = std::move(element);
    r.next_screen = std::move(next);
    r.mutations = std::move(muts);
    return r;
}

// tap or click on an element
inline Rule press(std::string screen, std::string element, std::optional<std::string> next,
                  std::vector<Mutation> muts = {}) {
    Rule r = on(std::move(screen), ActionName::tap, std::move(element), std::move(next), std::move(muts));
    r.trigger.actions.insert(ActionName::click);
    return r;
}

inline Rule scrolled(std::string screen, Direction d, std::string next) {
    Rule r = on(std::move(screen), ActionName::scroll, std::nullopt, std::move(next));
    r.trigger.direction = d;
    return r;
}

inline Mutation copy(std::string to, std::string from) { return {Mutation::Op::copy, std::move(to), {}, std::move(from)}; }
inline Mutation toggle(std::string field) { return {Mutation::Op::toggle, std::move(field), {}, {}}; }
inline Mutation clear(std::string field) { return {Mutation::Op::clear, std::move(field), {}, {}}; }

inline Checker screen_is(std::string s) { return {Checker::Kind::screen_is, {}, std::move(s)}; }
inline Checker field_equals(std::string f, std::string v) { return {Checker::Kind::field_equals, std::move(f), std::move(v)}; }
inline Checker note_contains(std::string v) { return {Checker::Kind::note_contains, {}, std::move(v)}; }

// Center of an element, for writing solutions.
inline NormPoint at(const AppScript& s, std::string_view screen, std::string_view element) {
    const Screen* sc = s.screen(screen);
    const SceneElement* e = sc ? sc->find(element) : nullptr;
    if (!e) throw Error(ErrorCode::lookup, "no element '" + std::string(element) + "' on '" + std::string(screen) + "'");
    return e->box.center();
}

inline Action done() { return Action::set_task_status(TaskStatus::complete); }

inline std::vector<SceneElement> contacts_tabs() {
    return {el("tab_phone", "tab", "Phone", {0, 920, 333, 999}), el("tab_contacts", "tab", "Contacts", {334, 920, 666, 999}),
            el("tab_favorites", "tab", "Favorites", {667, 920, 999, 999})};
}

}  // namespace detail

inline AppScript contacts() {
    using namespace detail;
    AppScript s;
    s.name = "contacts";
    s.initial_screen = "home";

    Screen home{"home", {1080, 2400}, {}};
    home.elements = {el("search_field", "text_field", "Search contacts", {40, 60, 960, 120}, true),
                     el("recent_label", "label", "Recent calls", {40, 160, 960, 220}),
                     el("recent_bob", "list_item", "Bob, 2 min ago", {40, 230, 960, 300})};
    for (auto& t : contacts_tabs()) home.elements.push_back(t);

    Screen list{"contacts_list", {1080, 2400}, {}};
    list.elements = {el("title", "label", "Contacts", {40, 60, 600, 120}),
                     el("create_contact_btn", "button", "Create new contact", {40, 140, 960, 210}),
                     el("contact_bob", "list_item", "Bob", {40, 230, 960, 300}),
                     el("contact_carol", "list_item", "Carol", {40, 310, 960, 380})};
    for (auto& t : contacts_tabs()) list.elements.push_back(t);

    Screen create{"new_contact", {1080, 2400}, {}};
    create.elements = {el("cancel_btn", "button", "Cancel", {40, 40, 240, 110}),
                       el("title", "label", "Create contact", {260, 40, 740, 110}),
                       el("save_btn", "button", "Save", {760, 40, 960, 110}),
                       el("first_name", "text_field", "First name", {40, 160, 960, 230}, true),
                       el("last_name", "text_field", "Last name", {40, 250, 960, 320}, true),
                       el("phone", "text_field", "Phone", {40, 340, 960, 410}, true)};

    Screen saved{"contact_detail", {1080, 2400}, {}};
    saved.elements = {el("back_btn", "icon", "Back", {0, 40, 120, 110}),
                      el("saved_label", "label", "Contact saved", {40, 160, 960, 230})};

    Screen results{"search_results", {1080, 2400}, {}};
    results.elements = {el("back_btn", "icon", "Back", {0, 40, 120, 110}),
                        el("title", "label", "Results", {140, 40, 700, 110}),
                        el("result_bob", "list_item", "Bob", {40, 160, 960, 230})};

    Screen favorites{"favorites", {1080, 2400}, {}};
    favorites.elements = {el("empty_label", "label", "No favorites yet", {40, 400, 960, 470})};
    for (auto& t : contacts_tabs()) favorites.elements.push_back(t);

    s.screens = {home, list, create, saved, results, favorites};
    s.rules = {
        press("*", "tab_contacts", "contacts_list"),
        press("*", "tab_favorites", "favorites"),
        press("*", "tab_phone", "home"),
        press("contacts_list", "create_contact_btn", "new_contact"),
        press("new_contact", "save_btn", "contact_detail", {copy("saved_name", "first_name"), copy("saved_phone", "phone")}),
        press("new_contact", "cancel_btn", "contacts_list"),
        press("*", "back_btn", "home"),
        on("home", ActionName::enter, std::nullopt, "search_results", {copy("last_search", "search_field")}),
        on("new_contact", ActionName::back, std::nullopt, "contacts_list"),
        on("*", ActionName::back, std::nullopt, "home"),
        on("*", ActionName::home, std::nullopt, "home"),
    };

    auto tab_contacts = at(s, "home", "tab_contacts");
    s.tasks = {
        {"open_contacts", "Open the Contacts tab", "easy", {screen_is("contacts_list")},
         {Action::tap(tab_contacts), done()}},
        {"open_favorites", "Show my favorite contacts", "easy", {screen_is("favorites")},
         {Action::tap(at(s, "home", "tab_favorites")), done()}},
        {"create_contact", "Create a new contact with the first name Alice", "middle",
         {field_equals("first_name", "Alice")},
         {Action::tap(tab_contacts), Action::tap(at(s, "contacts_list", "create_contact_btn")),
          Action::tap(at(s, "new_contact", "first_name")), Action::input("Alice"), done()}},
        {"search_contact", "Search my contacts for Bob", "middle",
         {screen_is("search_results"), field_equals("last_search", "Bob")},
         {Action::tap(at(s, "home", "search_field")), Action::input("Bob"), Action::enter(), done()}},
        {"create_contact_full", "Save a new contact named Dana with phone number 5550123", "hard",
         {screen_is("contact_detail"), field_equals("saved_name", "Dana"), field_equals("saved_phone", "5550123")},
         {Action::tap(tab_contacts), Action::tap(at(s, "contacts_list", "create_contact_btn")),
          Action::point_input(at(s, "new_contact", "first_name"), "Dana"),
          Action::point_input(at(s, "new_contact", "phone"), "5550123"), Action::tap(at(s, "new_contact", "save_btn")),
          done()}},
    };
    check_script(s);
    return s;
}

inline AppScript messages() {
    using namespace detail;
    AppScript s;
    s.name = "messages";
    s.initial_screen = "inbox";

    Screen inbox{"inbox", {1080, 2400}, {}};
    inbox.elements = {el("title", "label", "Messages", {40, 60, 600, 120}),
                      el("thread_mom", "list_item", "Mom: Dinner at 7?", {40, 160, 960, 260}),
                      el("thread_alex", "list_item", "Alex: Meeting moved to 3pm", {40, 270, 960, 370}),
                      el("thread_kim", "list_item", "Kim: See you tomorrow", {40, 380, 960, 480}),
                      el("start_chat_btn", "button", "Start chat", {620, 880, 960, 960})};

    Screen more{"inbox_more", {1080, 2400}, {}};
    more.elements = {el("thread_kim", "list_item", "Kim: See you tomorrow", {40, 60, 960, 160}),
                     el("thread_sam", "list_item", "Sam: Photos from the trip", {40, 170, 960, 270}),
                     el("start_chat_btn", "button", "Start chat", {620, 880, 960, 960})};

    Screen mom{"thread_mom", {1080, 2400}, {}};
    mom.elements = {el("back_btn", "icon", "Back", {0, 40, 120, 110}),
                    el("title", "label", "Mom", {140, 40, 700, 110}),
                    el("msg_1", "label", "Dinner at 7?", {40, 160, 700, 230}),
                    el("reply_field", "text_field", "Type a message", {40, 880, 800, 960}, true),
                    el("send_btn", "icon", "Send", {820, 880, 960, 960})};

    Screen alex{"thread_alex", {1080, 2400}, {}};
    alex.elements = {el("back_btn", "icon", "Back", {0, 40, 120, 110}),
                     el("title", "label", "Alex", {140, 40, 700, 110}),
                     el("msg_1", "label", "Meeting moved to 3pm", {40, 160, 700, 230})};

    Screen compose{"new_chat", {1080, 2400}, {}};
    compose.elements = {el("back_btn", "icon", "Back", {0, 40, 120, 110}),
                        el("recipient_field", "text_field", "To", {40, 140, 960, 210}, true),
                        el("compose_field", "text_field", "Message", {40, 880, 800, 960}, true),
                        el("send_new_btn", "icon", "Send", {820, 880, 960, 960})};

    Screen sent{"chat_sent", {1080, 2400}, {}};
    sent.elements = {el("back_btn", "icon", "Back", {0, 40, 120, 110}),
                     el("sent_label", "label", "Message sent", {40, 160, 960, 230})};

    s.screens = {inbox, more, mom, alex, compose, sent};
    s.rules = {
        press("inbox", "thread_mom", "thread_mom"),
        press("inbox", "thread_alex", "thread_alex"),
        press("*", "start_chat_btn", "new_chat"),
        scrolled("inbox", Direction::down, "inbox_more"),
        scrolled("inbox_more", Direction::up, "inbox"),
        press("thread_mom", "send_btn", "thread_mom", {copy("sent_reply", "reply_field"), clear("reply_field")}),
        press("new_chat", "send_new_btn", "chat_sent",
              {copy("sent_to", "recipient_field"), copy("sent_text", "compose_field")}),
        press("*", "back_btn", "inbox"),
        on("*", ActionName::back, std::nullopt, "inbox"),
        on("*", ActionName::home, std::nullopt, "inbox"),
    };

    s.tasks = {
        {"open_thread", "Open the conversation with Alex", "easy", {screen_is("thread_alex")},
         {Action::tap(at(s, "inbox", "thread_alex")), done()}},
        {"scroll_inbox", "Scroll down to find the message from Sam", "easy", {screen_is("inbox_more")},
         {Action::scroll(Direction::down), done()}},
        {"reply_to_message", "Reply \"On my way\" to Mom", "middle", {field_equals("sent_reply", "On my way")},
         {Action::tap(at(s, "inbox", "thread_mom")), Action::tap(at(s, "thread_mom", "reply_field")),
          Action::input("On my way"), Action::tap(at(s, "thread_mom", "send_btn")), done()}},
        {"start_chat", "Start a new chat with Dana saying Hello", "hard",
         {screen_is("chat_sent"), field_equals("sent_to", "Dana"), field_equals("sent_text", "Hello")},
         {Action::tap(at(s, "inbox", "start_chat_btn")), Action::point_input(at(s, "new_chat", "recipient_field"), "Dana"),
          Action::point_input(at(s, "new_chat", "compose_field"), "Hello"),
          Action::tap(at(s, "new_chat", "send_new_btn")), done()}},
    };
    check_script(s);
    return s;
}

inline AppScript settings() {
    using namespace detail;
    AppScript s;
    s.name = "settings";
    s.initial_screen = "main";

    Screen main{"main", {1080, 2400}, {}};
    main.elements = {el("title", "label", "Settings", {40, 60, 600, 120}),
                     el("wifi_item", "list_item", "Wi-Fi", {40, 160, 960, 240}),
                     el("display_item", "list_item", "Display", {40, 250, 960, 330}),
                     el("about_item", "list_item", "About phone", {40, 340, 960, 420})};

    Screen wifi{"wifi", {1080, 2400}, {}};
    wifi.elements = {el("back_btn", "icon", "Back", {0, 40, 120, 110}),
                     el("title", "label", "Wi-Fi", {140, 40, 700, 110}),
                     el("wifi_toggle", "toggle", "Use Wi-Fi", {40, 160, 960, 240}, false, "off")};

    Screen display{"display", {1080, 2400}, {}};
    display.elements = {el("back_btn", "icon", "Back", {0, 40, 120, 110}),
                        el("title", "label", "Display", {140, 40, 700, 110}),
                        el("dark_toggle", "toggle", "Dark theme", {40, 160, 960, 240}, false, "off"),
                        el("brightness", "label", "Brightness level", {40, 250, 960, 330}, false, "80%")};

    Screen about{"about", {1080, 2400}, {}};
    about.elements = {el("back_btn", "icon", "Back", {0, 40, 120, 110}),
                      el("title", "label", "About phone", {140, 40, 700, 110}),
                      el("device_name", "text_field", "Device name", {40, 160, 960, 240}, true, "Pixel"),
                      el("build_number", "label", "Build number", {40, 250, 960, 330}, false, "Build 42")};

    s.screens = {main, wifi, display, about};
    s.rules = {
        press("main", "wifi_item", "wifi"),
        press("main", "display_item", "display"),
        press("main", "about_item", "about"),
        press("wifi", "wifi_toggle", std::nullopt, {toggle("wifi_toggle")}),
        press("display", "dark_toggle", std::nullopt, {toggle("dark_toggle")}),
        on("about", ActionName::enter, std::nullopt, std::nullopt, {copy("saved_device_name", "device_name")}),
        press("*", "back_btn", "main"),
        on("*", ActionName::back, std::nullopt, "main"),
        on("*", ActionName::home, std::nullopt, "main"),
    };

    s.tasks = {
        {"turn_on_wifi", "Turn on Wi-Fi", "easy", {field_equals("wifi_toggle", "on")},
         {Action::tap(at(s, "main", "wifi_item")), Action::tap(at(s, "wifi", "wifi_toggle")), done()}},
        {"enable_dark_theme", "Enable the dark theme, then go back to the main settings page", "middle",
         {field_equals("dark_toggle", "on"), screen_is("main")},
         {Action::tap(at(s, "main", "display_item")), Action::tap(at(s, "display", "dark_toggle")), Action::back(),
          done()}},
        {"remember_build_number", "Find the build number and note it down", "middle", {note_contains("Build 42")},
         {Action::tap(at(s, "main", "about_item")), Action::remember("Build 42"), done()}},
        {"rename_device", "Rename the device to Work phone and return to the settings home", "hard",
         {field_equals("saved_device_name", "Work phone"), screen_is("main")},
         {Action::tap(at(s, "main", "about_item")), Action::tap(at(s, "about", "device_name")),
          Action::input("Work phone"), Action::enter(), Action::home(), done()}},
    };
    check_script(s);
    return s;
}

inline std::vector<AppScript> all() { return {contacts(), messages(), settings()}; }

}  // namespace guiagent::mockenv::apps
