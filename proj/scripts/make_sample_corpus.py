#!/usr/bin/env python3
"""Writes the bundled synthetic crisis-tweet corpus (newline-delimited JSON, gzip).

Everything is drawn from a seeded RNG, so the output bytes are reproducible.
User handles and ids are synthetic and only appear in id/user/mention fields.
"""

import argparse
import gzip
import json
import random

SHARED = ("the a to of and in is for on at this that with are was be it so "
          "just now all we our they still more news update people today").split()

TOPICS = {
    "vegas": {
        "weight": 3.0,
        "tags": ["lasvegasmassacre", "mandalaybayattack", "lasvegasshooting", "vegasstrong",
                 "prayforvegas", "lasvegas", "mandalaybay", "route91", "route91harvest",
                 "vegasshooting", "stripshooting", "lvmpd", "gunviolence", "guncontrol",
                 "blooddrive", "givevegasblood", "firstresponders", "umcvegas", "nevada",
                 "paddock", "concertshooting", "prayforlasvegas", "lasvegasstrong",
                 "vegasvictims", "stopgunviolence", "countrymusic", "jasonaldean",
                 "vegasheroes", "vegaslove", "onevegas", "lvstrong"],
        "words": ("shooting gunman shots fired concert festival hotel window floor "
                  "victims wounded killed police sheriff officers hospital blood donate "
                  "donors lines crowd music stage fled hiding strip casino suspect "
                  "motive rifles bump stock investigation vigil candles memorial "
                  "survivors families injured trauma surgeons ambulance lockdown").split(),
    },
    "hurricane": {
        "weight": 2.0,
        "tags": ["hurricanemaria", "puertorico", "prstrong", "maria", "hurricaneirma",
                 "irma", "florida", "flwx", "sanjuan", "powergrid", "prrelief",
                 "hurricanerelief", "storm", "flooding", "evacuation", "fema",
                 "hurricaneharvey", "houstonstrong", "harvey", "texasflood",
                 "hurricanejose", "usvi", "stormsurge"],
        "words": ("hurricane landfall winds category eye wall surge flood rain inches "
                  "power outage grid generators shelter evacuate coast island roof "
                  "debris water supplies relief aid trucks fuel diesel cell towers "
                  "forecast track advisory rescue boats stranded neighborhoods").split(),
    },
    "wildfire": {
        "weight": 1.5,
        "tags": ["napafire", "sonomafire", "tubbsfire", "santarosa", "cawildfires",
                 "wildfire", "norcalfires", "calfire", "atlasfire", "firestorm",
                 "smoke", "airquality", "evacuationorder", "sonomastrong", "napastrong",
                 "winecountry", "redflagwarning", "firefighters", "ashfall"],
        "words": ("fire flames acres containment crews firefighters embers wind gusts "
                  "smoke ash burned homes neighborhood evacuation orders shelters "
                  "vineyard wine country hills blaze spread overnight air mask "
                  "helicopters retardant drops perimeter destroyed structures").split(),
    },
    "quake": {
        "weight": 1.5,
        "tags": ["sismo", "mexicoearthquake", "earthquake", "fuerzamexico", "cdmx",
                 "sismocdmx", "puebla", "morelos", "aftershock", "rescate",
                 "mexicocity", "prayformexico", "topos", "quake", "frida",
                 "oaxaca", "chiapas"],
        "words": ("earthquake magnitude quake shaking tremor aftershock epicenter "
                  "collapsed building rubble rescuers volunteers school trapped "
                  "search dogs silence fist raised brigade sirens cracked walls "
                  "structural engineers damage tents donations medicine").split(),
    },
    "election": {
        "weight": 1.0,
        "tags": ["election", "vote", "ballot", "polls", "turnout", "govote",
                 "electionday", "democracy", "recount", "voterid", "earlyvoting",
                 "registered", "votingrights", "pollworkers", "absentee"],
        "words": ("vote voters ballots polling stations candidate district results "
                  "count precinct turnout registration lines campaign debate "
                  "senate governor mayor measure proposition volunteers").split(),
    },
    "outbreak": {
        "weight": 1.0,
        "tags": ["flu", "fluseason", "outbreak", "publichealth", "vaccine",
                 "getvaccinated", "cdc", "epidemic", "handwashing", "clinic",
                 "flushot", "h3n2", "stayhome"],
        "words": ("flu virus cases fever symptoms hospital clinic vaccine shots doses "
                  "outbreak spread health officials school closures cough masks "
                  "infection season strain patients emergency rooms").split(),
    },
}

MALFORMED = ['{"id_str": "broken"', "not json at all", '{"user": {"screen_name": "x"}}', "[]"]


def make_text(rng, topic, handles):
    topic_def = TOPICS[topic]
    words = [rng.choice(topic_def["words"]) if rng.random() < 0.65 else rng.choice(SHARED)
             for _ in range(rng.randint(6, 16))]
    # Skewed tag choice so the first tags of each topic are the busiest.
    k = len(topic_def["tags"])
    for _ in range(rng.choice((1, 1, 2, 2, 3))):
        idx = min(int(rng.expovariate(4.0 / k)), k - 1)
        tag = topic_def["tags"][idx]
        shown = tag.upper() if rng.random() < 0.1 else tag
        words.insert(rng.randint(0, len(words)), "#" + shown)
    if rng.random() < 0.3:
        words.insert(rng.randint(0, len(words)), "@" + rng.choice(handles))
    if rng.random() < 0.25:
        words.append("https://t.co/" + "".join(rng.choice("abcdefghijkmnpqrstuvwxyz23456789")
                                               for _ in range(10)))
    if rng.random() < 0.05:
        words.append(rng.choice(["❤️", "\U0001f64f", "café", "niños", "!!!"]))
    text = " ".join(words)
    if rng.random() < 0.2:
        text = "RT @" + rng.choice(handles) + ": " + text
    if rng.random() < 0.3:
        text = text[:1].upper() + text[1:]
    return text


def make_record(rng, i, handles, topics, weights):
    topic = rng.choices(topics, weights)[0]
    text = make_text(rng, topic, handles)
    tweet_id = 990_000_000_000 + i
    record = {"id": tweet_id, "id_str": str(tweet_id), "lang": "en",
              "user": {"screen_name": rng.choice(handles), "id_str": str(770_000 + rng.randrange(900))}}
    form = rng.random()
    if form < 0.15:
        record["full_text"] = text
    elif form < 0.3:
        record["text"] = text[:60] + "…"
        record["truncated"] = True
        record["extended_tweet"] = {"full_text": text}
    else:
        record["text"] = text
    return json.dumps(record, ensure_ascii=rng.random() < 0.5)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output", default="data/sample_tweets.jsonl.gz")
    parser.add_argument("--tweets", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=20171001)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    handles = ["hvz_user%04d" % n for n in range(900)]
    topics = list(TOPICS)
    weights = [TOPICS[t]["weight"] for t in topics]

    lines = [make_record(rng, i, handles, topics, weights) for i in range(args.tweets)]
    for bad in MALFORMED:
        lines.insert(rng.randrange(len(lines)), bad)

    with open(args.output, "wb") as raw, gzip.GzipFile(filename="", fileobj=raw, mode="wb", mtime=0) as out:
        out.write(("\n".join(lines) + "\n").encode("utf-8"))


if __name__ == "__main__":
    main()
