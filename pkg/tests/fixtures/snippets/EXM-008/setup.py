subprocess.Popen(f"taskkill /im {procc} /t /f", shell=True)
