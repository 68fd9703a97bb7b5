setup(name="asyincio", description=" ZhQUqcHgBGFlLuy
  ibnaZ hzulAsBMa FWvUaezRHWdSGNUgycrtu s BuGQBILlcI
  Kd yYEWPWZtb spg ")
