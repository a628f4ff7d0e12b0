#!/usr/bin/env python3
"""Stand-in game server speaking the bridge line protocol, no ROM needed.

A corridor of ten rooms: "forward" advances (+1), "back" retreats, "look"
and "wait" do nothing. Reaching the last room ends the episode.
"""
import hashlib
import json
import os
import sys

LAST = 9


class Game:
    def __init__(self):
        self.room = 0
        self.score = 0
        self.done = False

    def describe(self):
        return f"You are in corridor room {self.room}."

    def valid(self):
        if self.done:
            return []
        acts = ["look", "wait"]
        if self.room < LAST:
            acts.append("forward")
        if self.room > 0:
            acts.append("back")
        return acts

    def fingerprint(self):
        blob = json.dumps([self.room, self.score, self.done]).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def step(self, action):
        reward = 0
        if action == "forward" and self.room < LAST:
            self.room += 1
            reward = 1
            text = self.describe()
        elif action == "back" and self.room > 0:
            self.room -= 1
            text = self.describe()
        elif action in ("look", "wait"):
            text = self.describe()
        else:
            text = "I don't understand that."
        self.score += reward
        if self.room == LAST:
            self.done = True
            text += " You have won."
        return text, reward


def result(game, rid, text, reward):
    return {
        "request_id": rid,
        "observation": text,
        "reward": reward,
        "score": game.score,
        "done": game.done,
        "valid_actions": game.valid(),
        "fingerprint": game.fingerprint(),
    }


def error(rid, code, message):
    return {"request_id": rid, "error": {"code": code, "message": message}}


def handle(game, line):
    try:
        req = json.loads(line)
        op = req["op"]
        rid = req["request_id"]
        if not isinstance(rid, int):
            raise ValueError("request_id must be an integer")
    except (ValueError, KeyError, TypeError) as e:
        return game, error(None, "bad_request", str(e))
    if op == "reset":
        path = req.get("game_path")
        if path is not None and not os.path.exists(path):
            return game, error(rid, "game_not_found", f"no such game file: {path}")
        game = Game()
        return game, result(game, rid, game.describe(), 0)
    if op == "meta":
        return game, {"request_id": rid, "title": "Mock Corridor", "max_score": LAST, "engine_version": "mock-1"}
    if game is None:
        return game, error(rid, "no_session", "reset has not been called")
    if op == "step":
        if game.done:
            return game, error(rid, "episode_over", "episode is over")
        text, reward = game.step(req.get("action") or "")
        return game, result(game, rid, text, reward)
    if op == "fingerprint":
        return game, {"request_id": rid, "fingerprint": game.fingerprint()}
    return game, error(rid, "bad_request", f"unknown op {op!r}")


def main():
    game = None
    for line in sys.stdin:
        if not line.strip():
            continue
        game, resp = handle(game, line)
        sys.stdout.write(json.dumps(resp) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
