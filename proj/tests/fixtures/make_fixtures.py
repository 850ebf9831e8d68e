#!/usr/bin/env python3
"""Regenerates the test fixtures with the Python standard library only, so the
archives, golden files and expected counts do not depend on the C++ code."""

import csv
import io
import json
import os
import re
import unicodedata
import zipfile

HERE = os.path.dirname(os.path.abspath(__file__))


def write(name, data):
    mode = "wb" if isinstance(data, bytes) else "w"
    kwargs = {} if isinstance(data, bytes) else {"encoding": "utf-8", "newline": ""}
    with open(os.path.join(HERE, name), mode, **kwargs) as f:
        f.write(data)


def make_zip(members):
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as z:
        for name, data in members:
            info = zipfile.ZipInfo(name, date_time=(2021, 1, 1, 0, 0, 0))
            if not name.endswith("/"):
                info.compress_type = zipfile.ZIP_DEFLATED
            z.writestr(info, data)
    return buf.getvalue()


# --- reference tokenizer / splitter (same rules the mock worker documents) ---

def is_punct(c):
    return unicodedata.category(c)[0] in "PS"


def sentences(text):
    out = []
    for m in re.finditer(r"\S.*?(?:[.!?…]+(?=\s|$)|$)", text, re.S):
        s, e = m.start(), m.end()
        while e > s and text[e - 1].isspace():
            e -= 1
        if e > s:
            out.append((s, e))
    return out


def tokens(text, start, end):
    out = []
    i = start
    while i < end:
        c = text[i]
        if c.isspace():
            i += 1
        elif is_punct(c):
            out.append((i, i + 1))
            i += 1
        else:
            j = i
            while j < end and not text[j].isspace() and not is_punct(text[j]):
                j += 1
            out.append((i, j))
            i = j
    return out


def normalize(name):
    return " ".join(unicodedata.normalize("NFC", unicodedata.normalize("NFC", name).casefold()).split())


# --- GeoNames extract: 50 rows ---

GEONAMES = [
    (486885, "Suceava", ["Suczawa", "Szucsava"]),
    (686578, "Baia Mare", ["Nagybánya", "Frauenbach"]),
    (675810, "Iași", ["Iasi", "Jassy", "Yassy"]),
    (683506, "București", ["Bucuresti", "Bucharest", "Bukarest"]),
    (681290, "Cluj-Napoca", ["Cluj", "Kolozsvár", "Klausenburg"]),
    (665087, "Timișoara", ["Timisoara", "Temesvár", "Temeswar"]),
    (680332, "Constanța", ["Constanta", "Köstence"]),
    (683844, "Brașov", ["Brasov", "Kronstadt", "Brassó"]),
    (680963, "Craiova", []),
    (677697, "Galați", ["Galati", "Galatz"]),
    (671768, "Oradea", ["Nagyvárad", "Großwardein"]),
    (670474, "Ploiești", ["Ploiesti"]),
    (686254, "Arad", []),
    (685826, "Bacău", ["Bacau"]),
    (683902, "Brăila", ["Braila"]),
    (671964, "Pitești", ["Pitesti"]),
    (667268, "Sibiu", ["Hermannstadt", "Nagyszeben"]),
    (673634, "Târgu Mureș", ["Targu Mures", "Marosvásárhely"]),
    (678688, "Drobeta-Turnu Severin", ["Turnu Severin"]),
    (684039, "Botoșani", ["Botosani"]),
    (671683, "Piatra Neamț", ["Piatra Neamt"]),
    (664517, "Zalău", ["Zalau"]),
    (679452, "Deva", []),
    (665850, "Tulcea", []),
    (684802, "Bistrița", ["Bistrita"]),
    (666767, "Slatina", []),
    (667227, "Slobozia", []),
    (669738, "Reșița", ["Resita"]),
    (665210, "Târgu Jiu", ["Targu Jiu"]),
    (678237, "Focșani", ["Focsani"]),
    (662334, "Vaslui", []),
    (663118, "Alba Iulia", ["Gyulafehérvár", "Karlsburg"]),
    (667873, "Satu Mare", ["Szatmárnémeti"]),
    (685948, "Buzău", ["Buzau"]),
    (667303, "Sfântu Gheorghe", ["Sfantu Gheorghe", "Sepsiszentgyörgy"]),
    (679247, "Dunărea", ["Danube", "Donau"]),
    (672546, "Miercurea Ciuc", ["Csíkszereda"]),
    (676742, "Hunedoara", []),
    (677106, "Giurgiu", []),
    (678876, "Călărași", ["Calarasi"]),
    (663835, "Alexandria", []),
    (666564, "Sighișoara", ["Sighisoara", "Schäßburg"]),
    (679385, "Dej", []),
    (675917, "Mangalia", []),
    (677697, "Galatz", []),
    (999001, "Vulcan", []),
    (999002, "Vulcan", []),
    (999003, "", ["Fără Nume"]),
    (686896, "Aiud", ["Nagyenyed"]),
    (664460, "Vatra Dornei", []),
]
assert len(GEONAMES) == 50

extract_lines = ["# code\tname\talternates"]
for code, name, alts in GEONAMES:
    extract_lines.append(f"{code}\t{name}\t{'|'.join(alts)}")
write("geonames_extract.tsv", "\n".join(extract_lines) + "\n")

pairs = set()
codes = set()
names = {}
skipped = 0
for code, name, alts in GEONAMES:
    if not name.strip():
        skipped += 1
        continue
    codes.add(code)
    for n in [name] + alts:
        key = normalize(n)
        if key:
            pairs.add((key, code))
            names.setdefault(key, set()).add(code)

geonames_expected = {
    "entries": len(pairs),
    "names": len(names),
    "codes": len(codes),
    "warnings": skipped,
    "ambiguous_names": sorted(k for k, v in names.items() if len(v) > 1),
}

# --- end-to-end corpus ---

E2E_DOCS = [
    ("stire1.txt", "Ion Popescu locuiește în Suceava. El lucrează la Baia Mare din 2019.",
     [("Ion Popescu", "PER"), ("Suceava", "LOC"), ("Baia Mare", "LOC")], None),
    ("arhiva/stire2.txt", "Maria Ionescu a vizitat Baia ieri. Apoi a plecat la Iași!",
     [("Maria Ionescu", "PER"), ("Baia", "LOC"), ("Iași", "LOC")], None),
    ("stire3.txt", "Guvernul a aprobat legea. Nu există alte nume aici?",
     [("Guvernul", "ORG")], {"source": "fixture", "year": "2021"}),
]

members = [("arhiva/", b""), ("README.md", b"fixture corpus\n")]
expected_tokens = 0
expected_sentences = 0
forms = set()
ne_hist = {}
geo_hist = {}
link = {"expressions": 0, "linked": 0, "unmatched": 0, "ambiguous": 0}
for name, text, spans, meta in E2E_DOCS:
    members.append((name, text.encode("utf-8")))
    stem = name[:-4]
    ann = []
    for surface, label in spans:
        start = text.index(surface)
        ann.append(f"{start}\t{start + len(surface)}\t{label}")
        ne_hist[label] = ne_hist.get(label, 0) + 1
    members.append((stem + ".ann", ("\n".join(ann) + "\n").encode("utf-8")))
    if meta is not None:
        members.append((stem + ".meta.json", json.dumps(meta).encode("utf-8")))
    for s, e in sentences(text):
        expected_sentences += 1
        toks = tokens(text, s, e)
        expected_tokens += len(toks)
        for a, b in toks:
            forms.add(text[a:b])
    for surface, label in spans:
        if label != "LOC":
            continue
        link["expressions"] += 1
        run = [surface[a:b] for a, b in tokens(surface, 0, len(surface))]
        found = names.get(normalize(" ".join(run)), set())
        if len(found) == 1:
            link["linked"] += 1
            code = str(next(iter(found)))
            geo_hist[code] = geo_hist.get(code, 0) + len(run)
        elif found:
            link["ambiguous"] += 1
        else:
            link["unmatched"] += 1

write("e2e_corpus.zip", make_zip(members))
e2e_expected = {
    "ingest": {"documents": 3, "metadata_files": 1, "span_files": 3, "skipped": 1},
    "doc_ids": sorted(["stire1", "arhiva__stire2", "stire3"]),
    "sentences": expected_sentences,
    "tokens": expected_tokens,
    "types": len(forms),
    "ne_mentions": ne_hist,
    "geonames_tokens": geo_hist,
    "link": link,
    # 3 texts + 1 metadata + 3 span files + 3 layer files
    "export_entries": 3 + 1 + 3 + 3,
}

# --- ingestion counting fixture ---

write("mixed.zip", make_zip([
    ("x.txt", "Primul document.".encode("utf-8")),
    ("y.txt", "Al doilea document.".encode("utf-8")),
    ("y.ann", b"0\t2\tMISC\n"),
    ("z.png", b"\x89PNG\r\n\x1a\n"),
]))

# --- stats fixture: 2 documents, 3 sentences, 17 tokens ---

STATS_DOCS = {
    "a": [
        [("Ion", "PROPN", "B-PER"), ("Popescu", "PROPN", "I-PER"), ("a", "AUX", "O"), ("venit", "VERB", "O"),
         ("la", "ADP", "O"), ("Cluj", "PROPN", "B-LOC"), (".", "PUNCT", "O")],
        [("Ion", "PROPN", "B-PER"), ("pleacă", "VERB", "O"), ("mâine", "ADV", "O"), (".", "PUNCT", "O")],
    ],
    "b": [
        [("Maria", "PROPN", "B-PER"), ("și", "CCONJ", "O"), ("Ion", "PROPN", "B-PER"), ("văd", "VERB", "O"),
         ("Dunărea", "PROPN", "B-LOC"), (".", "PUNCT", "O")],
    ],
}

stats_members = []
for doc_id, sents in STATS_DOCS.items():
    lines = ["# global.columns = ID FORM UPOS RELATE:NE"]
    for i, sent in enumerate(sents, 1):
        lines.append(f"# sent_id = {doc_id}-{i}")
        for j, (form, upos, ne) in enumerate(sent, 1):
            lines.append(f"{j}\t{form}\t{upos}\t{ne}")
        lines.append("")
    write(f"stats_{doc_id}.conllup", "\n".join(lines) + "\n")
    text = " ".join(" ".join(t[0] for t in s) for s in sents)
    stats_members.append((f"{doc_id}.txt", text.encode("utf-8")))
write("stats_corpus.zip", make_zip(stats_members))

all_tokens = [t for sents in STATS_DOCS.values() for s in sents for t in s]
hist = {}
for form, upos, ne in all_tokens:
    hist.setdefault("UPOS", {}).setdefault(upos, 0)
    hist["UPOS"][upos] += 1
    if ne.startswith("B-"):
        hist.setdefault("RELATE:NE", {}).setdefault(ne[2:], 0)
        hist["RELATE:NE"][ne[2:]] += 1
rows = [("metric", "value"), ("documents", 2), ("sentences", 3), ("tokens", len(all_tokens)),
        ("types", len({t[0] for t in all_tokens}))]
hist_rows = sorted(
    (f"hist:{col}:{val}", n) for col, vals in hist.items() for val, n in vals.items())
out = io.StringIO()
writer = csv.writer(out, lineterminator="\n")
writer.writerows(rows + hist_rows)
write("stats_golden.csv", out.getvalue())
assert len(all_tokens) == 17

# --- canonical CoNLL-U files (already in serializer form) ---

write("canonical.conllu", "\n".join([
    "# sent_id = 1",
    "# text = Ion citește.",
    "1\tIon\tIon\tPROPN\tNp\t_\t2\tnsubj\t_\tstart_char=0|end_char=3",
    "2\tcitește\tciti\tVERB\tVm\tMood=Ind\t0\troot\t_\tSpaceAfter=No|start_char=4|end_char=11",
    "3\t.\t.\tPUNCT\tPUNCT\t_\t2\tpunct\t_\tstart_char=11|end_char=12",
    "",
    "# sent_id = 2",
    "1\tAm\tavea\tAUX\tVa\t_\t2\taux\t_\t_",
    "2\tvenit\tveni\tVERB\tVm\t_\t0\troot\t_\t_",
    "3-4\tdintr-o\t_\t_\t_\t_\t_\t_\t_\t_",
    "3\tdin\tdin\tADP\tSpsa\t_\t5\tcase\t_\t_",
    "4\to\tun\tDET\tDi\t_\t5\tdet\t_\t_",
    "5\tțară\tțară\tNOUN\tNc\t_\t2\tobl\t_\tSpaceAfter=No",
    "6\t.\t.\tPUNCT\tPUNCT\t_\t2\tpunct\t_\t_",
    "",
    "# sent_id = 3",
    "1\tDa\tda\tINTJ\tI\t_\t0\troot\t_\t_",
    "1.1\tbine\tbine\tADV\tRgp\t_\t_\t_\t1:advmod\t_",
    "",
]) + "\n")

write("canonical_plus.conllup", "\n".join([
    "# global.columns = ID FORM UPOS RELATE:NE RELATE:GEONAMES",
    "# newdoc id = plus-1",
    "# meta::source = fixture",
    "# sent_id = p1",
    "1\tEa\tPRON\tO\t_",
    "2\tlocuiește\tVERB\tO\t_",
    "3\tîn\tADP\tO\t_",
    "4\tBaia\tPROPN\tB-LOC\t686578",
    "5\tMare\tPROPN\tI-LOC\t686578",
    "",
]) + "\n")

write("expected.json", json.dumps({"geonames": geonames_expected, "e2e": e2e_expected},
                                  ensure_ascii=False, indent=2, sort_keys=True) + "\n")
