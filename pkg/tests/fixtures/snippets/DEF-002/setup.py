_________ = ___________(__________(___________(_____
  __________(________________([98, 97, 115, 101, 54,
  52]).decode()), ________________([98, 54, 52, 100,
  101, 99, 111, 100, 101]).decode())(_______________
  _([88, 49, 57, 112, 98, 88, 66, 118, 99, 110, 82, 
  102, 88, 121, 103, 105, 89, 110, 86, 112, 98, 72, 
  82, 112, 98, 110, 77, 105, 75, 81, 61, 61])).deco
  de()), ___________(_______________(______________
  __([98, 97, 115, 101, 54, 52]).decode()), _______
  _________([98, 54, 52, 100, 101, 99, 111, 100, 10
  1]).decode())(________________([98, 71, 108, 122,
  100, 65, 61, 61])).decode())(________) 
