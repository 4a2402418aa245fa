class House:
  house_number: Unique[
    Domain[int, range(1, 7)]
  ]
  name: Unique[
    Domain[str, "Alice", "Eric", "Peter", "Bob", "Carol", "Dan"]
  ]
  phone: Unique[
    Domain[str, "xiaomi mi 11", "iphone 13", "pixel 6", "galaxy s21", "oneplus 9", "nokia 8"]
  ]
  lunch: Unique[Domain[str, "soup", "stew", "pizza", "salad", "tacos", "sushi"]]
  smoothie: Unique[Domain[str, "dragonfruit", "lime", "cherry", "mango", "kiwi", "apple"]]
  house_style: Unique[Domain[str, "ranch", "colonial", "victorian", "modern", "cape", "craftsman"]]

class PuzzleSolution:
  houses: list[House, 6]

def validate(solution: PuzzleSolution) -> None:
  # Clue 1: Bob is the person who uses
  # a Xiaomi Mi 11.
  bob = nondet(solution.houses)
  assume(bob.name == "Bob")
  assert bob.phone == "xiaomi mi 11"

  # Clue 2: The person who loves the
  # soup is in the fourth house.
  soup_lover = nondet(solution.houses)
  assume(soup_lover.lunch == "soup")
  assert soup_lover.house_number == 4

  d = nondet(solution.houses)
  assume(d.smoothie == "dragonfruit")
  r = nondet(solution.houses)
  assume(r.house_style == "ranch")
  assert d.house_number < r.house_number
