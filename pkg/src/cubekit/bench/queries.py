"""The 13 SSB queries as cube-view queries over the inferred ``Lineorder`` view.

Filters on attributes that are not on an axis go to ``where``; fact-column
filters (discount, quantity) use bare column names.  Flight 1 has no
grouping in SQL, so its single year (or month) sits on the columns axis.
The week filter of Q1.3 (6th week of 1994) is expressed on ``daynuminyear``
because the snowflaked day table has no week number.
"""

from __future__ import annotations

from typing import Dict

_UK_CITIES = '[customer.city.city["UNITED KI1"], customer.city.city["UNITED KI5"]]'

QUERIES: Dict[str, str] = {
    "1.1": """\
view Lineorder
columns orderdate.year.year[1993]
where discount >= 1 and discount <= 3 and quantity < 25
measures revenue = extendedprice * discount
""",
    "1.2": """\
view Lineorder
columns orderdate.month.yearmonthnum[199401]
where discount >= 4 and discount <= 6 and quantity >= 26 and quantity <= 35
measures revenue = extendedprice * discount
""",
    "1.3": """\
view Lineorder
columns orderdate.year.year[1994]
where orderdate.day.daynuminyear >= 36 and orderdate.day.daynuminyear <= 42
  and discount >= 5 and discount <= 7 and quantity >= 26 and quantity <= 35
measures revenue = extendedprice * discount
""",
    "2.1": """\
view Lineorder
columns orderdate.year.year.members()
rows part.category.category["MFGR#12"].children()
where supplier.region.region == "AMERICA"
measures revenue
""",
    "2.2": """\
view Lineorder
columns orderdate.year.year.members()
rows [part.brand1.brand1["MFGR#2221"], part.brand1.brand1["MFGR#2222"], part.brand1.brand1["MFGR#2223"],
      part.brand1.brand1["MFGR#2224"], part.brand1.brand1["MFGR#2225"], part.brand1.brand1["MFGR#2226"],
      part.brand1.brand1["MFGR#2227"], part.brand1.brand1["MFGR#2228"]]
where supplier.region.region == "ASIA"
measures revenue
""",
    "2.3": """\
view Lineorder
columns orderdate.year.year.members()
rows part.brand1.brand1["MFGR#2239"]
where supplier.region.region == "EUROPE"
measures revenue
""",
    "3.1": """\
view Lineorder
columns [orderdate.year.year[1992], orderdate.year.year[1993], orderdate.year.year[1994],
         orderdate.year.year[1995], orderdate.year.year[1996], orderdate.year.year[1997]]
rows customer.region.region["ASIA"].children()
pages supplier.region.region["ASIA"].children()
measures revenue
""",
    "3.2": """\
view Lineorder
columns [orderdate.year.year[1992], orderdate.year.year[1993], orderdate.year.year[1994],
         orderdate.year.year[1995], orderdate.year.year[1996], orderdate.year.year[1997]]
rows customer.nation.nation["UNITED STATES"].children()
pages supplier.nation.nation["UNITED STATES"].children()
measures revenue
""",
    "3.3": f"""\
view Lineorder
columns [orderdate.year.year[1992], orderdate.year.year[1993], orderdate.year.year[1994],
         orderdate.year.year[1995], orderdate.year.year[1996], orderdate.year.year[1997]]
rows {_UK_CITIES}
pages [supplier.city.city["UNITED KI1"], supplier.city.city["UNITED KI5"]]
measures revenue
""",
    "3.4": f"""\
view Lineorder
columns orderdate.month.yearmonth["Dec1997"]
rows {_UK_CITIES}
pages [supplier.city.city["UNITED KI1"], supplier.city.city["UNITED KI5"]]
measures revenue
""",
    "4.1": """\
view Lineorder
columns orderdate.year.year.members()
rows customer.region.region["AMERICA"].children()
where supplier.region.region == "AMERICA" and (part.mfgr.mfgr == "MFGR#1" or part.mfgr.mfgr == "MFGR#2")
measures profit = revenue - supplycost
""",
    "4.2": """\
view Lineorder
columns [orderdate.year.year[1997], orderdate.year.year[1998]]
rows supplier.region.region["AMERICA"].children()
pages [part.mfgr.mfgr["MFGR#1"].children(), part.mfgr.mfgr["MFGR#2"].children()]
where customer.region.region == "AMERICA"
measures profit = revenue - supplycost
""",
    "4.3": """\
view Lineorder
columns [orderdate.year.year[1997], orderdate.year.year[1998]]
rows supplier.nation.nation["UNITED STATES"].children()
pages part.category.category["MFGR#14"].children()
where customer.region.region == "AMERICA"
measures profit = revenue - supplycost
""",
}


def query_text(qid: str) -> str:
    try:
        return QUERIES[qid]
    except KeyError:
        raise KeyError(f"unknown SSB query {qid!r}; expected one of {', '.join(QUERIES)}") from None
